//! Model-randomization sanity checks.
//!
//! A randomized copy of the model has some of its parameter blocks redrawn
//! from their initialization law. An explainer that keeps producing the
//! same explanations for the randomized copy is suspect, unless the copy
//! still predicts about as well as the original, in which case the check
//! cannot tell the explainer from the model.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explainers::Explainer;
use crate::metrics::{self, Metric};
use crate::models::{accuracy, FittedModel};
use crate::seed::RunSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomizationMode {
    /// Blocks from the output side down to `block` inclusive.
    Cascading,
    /// Exactly one block.
    Independent,
    /// Every block.
    FullReinit,
}

impl fmt::Display for RandomizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RandomizationMode::Cascading => "cascading",
            RandomizationMode::Independent => "independent",
            RandomizationMode::FullReinit => "full_reinit",
        })
    }
}

impl std::str::FromStr for RandomizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cascading" => Ok(RandomizationMode::Cascading),
            "independent" => Ok(RandomizationMode::Independent),
            "full_reinit" => Ok(RandomizationMode::FullReinit),
            _ => Err(Error::Config(format!("unknown randomization mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizationPlan {
    pub mode: RandomizationMode,
    /// Ignored for full reinitialization.
    pub block: usize,
    pub seed: RunSeed,
}

impl RandomizationPlan {
    pub fn full(seed: RunSeed) -> Self {
        RandomizationPlan {
            mode: RandomizationMode::FullReinit,
            block: 0,
            seed,
        }
    }

    /// Indices of the blocks this plan redraws.
    pub fn blocks(&self, n_blocks: usize) -> Result<Vec<usize>> {
        if self.mode != RandomizationMode::FullReinit && self.block >= n_blocks {
            return Err(Error::validation(format!(
                "block {} out of range for a model with {n_blocks} blocks",
                self.block
            )));
        }
        Ok(match self.mode {
            RandomizationMode::FullReinit => (0..n_blocks).collect(),
            RandomizationMode::Independent => vec![self.block],
            RandomizationMode::Cascading => (self.block..n_blocks).rev().collect(),
        })
    }

    pub fn label(&self) -> String {
        match self.mode {
            RandomizationMode::FullReinit => "full_reinit".to_owned(),
            mode => format!("{mode}:{}", self.block),
        }
    }
}

/// One plan per stage: cascading walks from the output block down to the
/// input block, independent visits each block, full reinit is one stage.
pub fn plan_stages(model: &FittedModel, mode: RandomizationMode, seed: RunSeed) -> Vec<RandomizationPlan> {
    let n = model.parameter_blocks().len();
    let plan = |block| RandomizationPlan { mode, block, seed };
    match mode {
        RandomizationMode::FullReinit => vec![RandomizationPlan::full(seed)],
        RandomizationMode::Cascading => (0..n).rev().map(plan).collect(),
        RandomizationMode::Independent => (0..n).map(plan).collect(),
    }
}

/// Copy of `model` with the plan's blocks redrawn. Each block uses its own
/// stream, so a block gets the same values whichever plan redraws it.
pub fn randomize_model(model: &FittedModel, plan: &RandomizationPlan) -> Result<FittedModel> {
    let blocks = model.parameter_blocks();
    let mut out = model.clone();
    for b in plan.blocks(blocks.len())? {
        let mut rng = plan.seed.derive_stream("randomization/block", b as u64);
        let values = blocks[b].init.draw(blocks[b].values.len(), &mut rng);
        out = out.with_block(b, &values)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Explanations barely changed but neither did the model's accuracy.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanityThresholds {
    /// Mean similarity magnitude above which explanations count as unchanged.
    pub similarity: f64,
    /// Randomized accuracy within this margin of the original counts as
    /// retained.
    pub accuracy_margin: f64,
}

impl Default for SanityThresholds {
    fn default() -> Self {
        SanityThresholds {
            similarity: 0.8,
            accuracy_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanityStage {
    pub stage: usize,
    pub label: String,
    /// Per-instance similarity; NaN where the metric is undefined.
    pub similarities: Vec<f64>,
    pub mean_similarity: f64,
    pub retained_accuracy: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanityReport {
    pub explainer: String,
    pub metric: String,
    pub original_accuracy: f64,
    pub stages: Vec<SanityStage>,
}

impl SanityReport {
    /// Fail if any stage fails, otherwise inconclusive if any stage is.
    pub fn overall(&self) -> Verdict {
        let has = |v| self.stages.iter().any(|s| s.verdict == v);
        if has(Verdict::Fail) {
            Verdict::Fail
        } else if has(Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }
}

pub fn verdict(mean_similarity: f64, original_accuracy: f64, retained_accuracy: f64, t: &SanityThresholds) -> Verdict {
    if !(mean_similarity.abs() > t.similarity) {
        Verdict::Pass
    } else if retained_accuracy >= original_accuracy - t.accuracy_margin {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    }
}

/// Compares explanations of `model` and each randomized stage on every
/// row of `sample`. Both models are explained with the same per-instance
/// stream, so only the model differs.
pub fn sanity_check(
    model: &FittedModel,
    explainer: &Explainer,
    sample: &Dataset,
    plans: &[RandomizationPlan],
    metric: &Metric,
    seed: RunSeed,
    thresholds: &SanityThresholds,
) -> Result<SanityReport> {
    if plans.is_empty() {
        return Err(Error::validation("sanity check needs at least one randomization stage"));
    }
    let tag = explainer.config.seed_tag();
    let explain_all = |m: &FittedModel| -> Result<Vec<Vec<f64>>> {
        (0..sample.n_instances())
            .into_par_iter()
            .map(|i| {
                let mut rng = seed.derive_stream(&tag, i as u64);
                Ok(explainer.explain(m, sample.row(i), &mut rng)?.scores)
            })
            .collect()
    };
    let original = explain_all(model)?;
    let original_accuracy = accuracy(model, sample);
    let mut stages = Vec::with_capacity(plans.len());
    for (stage, plan) in plans.iter().enumerate() {
        let randomized = randomize_model(model, plan)?;
        let explained = explain_all(&randomized)?;
        let similarities = original
            .iter()
            .zip(&explained)
            .map(|(a, b)| match metric.compute(a, b) {
                Ok(v) => Ok(v),
                Err(Error::UndefinedInput(_)) => Ok(f64::NAN),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<f64>>>()?;
        let defined: Vec<f64> = similarities.iter().copied().filter(|v| !v.is_nan()).collect();
        let mean_similarity = metrics::mean(&defined);
        let retained_accuracy = accuracy(&randomized, sample);
        stages.push(SanityStage {
            stage,
            label: plan.label(),
            mean_similarity,
            retained_accuracy,
            verdict: verdict(mean_similarity, original_accuracy, retained_accuracy, thresholds),
            similarities,
        });
    }
    Ok(SanityReport {
        explainer: explainer.id().to_owned(),
        metric: metric.to_string(),
        original_accuracy,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticModel, MlpModel, Model};

    #[test]
    fn full_reinit_leaves_original_untouched() {
        let model = FittedModel::Logistic(LogisticModel::new(vec![1.0, -2.0], 0.5));
        let before = model.clone();
        let r = randomize_model(&model, &RandomizationPlan::full(RunSeed(1))).unwrap();
        assert_eq!(model, before);
        assert_ne!(r, model);
    }

    #[test]
    fn independent_block_zero_keeps_block_one() {
        let model = FittedModel::Mlp(MlpModel::init(3, &[4], RunSeed(2)));
        let plan = RandomizationPlan {
            mode: RandomizationMode::Independent,
            block: 0,
            seed: RunSeed(7),
        };
        let r = randomize_model(&model, &plan).unwrap();
        let (a, b) = (model.parameter_blocks(), r.parameter_blocks());
        assert_ne!(a[0].values, b[0].values);
        assert_eq!(a[1].values, b[1].values);
    }

    #[test]
    fn cascading_stages_cover_blocks_from_the_top() {
        let model = FittedModel::Mlp(MlpModel::init(3, &[4, 2], RunSeed(2)));
        let plans = plan_stages(&model, RandomizationMode::Cascading, RunSeed(0));
        assert_eq!(plans.len(), 3);
        assert_eq!(plans[0].blocks(3).unwrap(), vec![2]);
        assert_eq!(plans[2].blocks(3).unwrap(), vec![2, 1, 0]);
        let last = randomize_model(&model, &plans[2]).unwrap();
        let full = randomize_model(&model, &RandomizationPlan::full(RunSeed(0))).unwrap();
        assert_eq!(last, full);
    }

    #[test]
    fn logistic_cascading_is_full_reinit() {
        let model = FittedModel::Logistic(LogisticModel::new(vec![1.0], 0.0));
        let plans = plan_stages(&model, RandomizationMode::Cascading, RunSeed(3));
        assert_eq!(plans.len(), 1);
        assert_eq!(
            randomize_model(&model, &plans[0]).unwrap(),
            randomize_model(&model, &RandomizationPlan::full(RunSeed(3))).unwrap()
        );
    }

    #[test]
    fn invalid_block_rejected() {
        let model = FittedModel::Logistic(LogisticModel::new(vec![1.0], 0.0));
        let plan = RandomizationPlan {
            mode: RandomizationMode::Independent,
            block: 1,
            seed: RunSeed(0),
        };
        assert!(randomize_model(&model, &plan).is_err());
    }

    #[test]
    fn verdict_table() {
        let t = SanityThresholds::default();
        assert_eq!(verdict(0.1, 0.9, 0.5, &t), Verdict::Pass);
        assert_eq!(verdict(0.95, 0.9, 0.5, &t), Verdict::Fail);
        assert_eq!(verdict(-0.95, 0.9, 0.85, &t), Verdict::Inconclusive);
        assert_eq!(verdict(f64::NAN, 0.9, 0.5, &t), Verdict::Pass);
    }

    #[test]
    fn randomized_model_predicts_differently() {
        let model = FittedModel::Mlp(MlpModel::init(2, &[3], RunSeed(1)));
        let r = randomize_model(&model, &RandomizationPlan::full(RunSeed(99))).unwrap();
        assert_ne!(model.predict_proba(&[0.3, 0.4]), r.predict_proba(&[0.3, 0.4]));
    }
}
