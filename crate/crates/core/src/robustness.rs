//! Oracle-based robustness measures: importance by deletion and
//! preservation, continuity, and the deletion blame probe.
//!
//! The measured output is the model's default output (class-1 probability
//! for classifiers). Nullifying a feature means replacing it with the
//! strategy's baseline value.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attribution::{rank_by_magnitude, Attribution};
use crate::dataset::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::explainers::Explainer;
use crate::metrics;
use crate::models::Model;
use crate::seed::RunSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum NullificationStrategy {
    DatasetMean,
    Zero,
    FixedVector(Vec<f64>),
}

impl NullificationStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            NullificationStrategy::DatasetMean => "dataset_mean",
            NullificationStrategy::Zero => "zero",
            NullificationStrategy::FixedVector(_) => "fixed_vector",
        }
    }

    pub fn baseline(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            NullificationStrategy::DatasetMean => Ok(ds.feature_means()),
            NullificationStrategy::Zero => Ok(vec![0.0; ds.n_features()]),
            NullificationStrategy::FixedVector(v) => {
                if v.len() != ds.n_features() {
                    return Err(Error::validation(format!(
                        "fixed baseline has {} values, dataset has {} features",
                        v.len(),
                        ds.n_features()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::validation("fixed baseline must be finite"));
                }
                Ok(v.clone())
            }
        }
    }
}

impl fmt::Display for NullificationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `dataset_mean`, `zero`, or a comma separated fixed vector.
impl FromStr for NullificationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset_mean" | "mean" => Ok(NullificationStrategy::DatasetMean),
            "zero" => Ok(NullificationStrategy::Zero),
            _ => s
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(NullificationStrategy::FixedVector)
                .map_err(|_| Error::Config(format!("unknown nullification strategy `{s}`"))),
        }
    }
}

fn check_indices(indices: &[usize], m: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::validation("nullification needs at least one feature"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
        return Err(Error::validation(format!("feature index {bad} out of range for {m} features")));
    }
    Ok(())
}

/// `x` with the features in `indices` replaced by `baseline`.
pub fn nullify_with(x: &[f64], indices: &[usize], baseline: &[f64]) -> Result<Vec<f64>> {
    check_indices(indices, x.len())?;
    let mut out = x.to_vec();
    for &i in indices {
        out[i] = baseline[i];
    }
    Ok(out)
}

pub fn nullify(x: &[f64], indices: &[usize], strategy: &NullificationStrategy, ds: &Dataset) -> Result<Instance> {
    if x.len() != ds.n_features() {
        return Err(Error::validation("instance length does not match the dataset"));
    }
    Instance::new(nullify_with(x, indices, &strategy.baseline(ds)?)?, None)
}

/// Indices of the `k` largest-magnitude scores.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    rank_by_magnitude(scores).into_iter().take(k).collect()
}

/// Indices of the `k` smallest-magnitude scores; ties keep index order.
pub fn bottom_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].abs().total_cmp(&scores[b].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::validation(format!("K must be in 1..={m}, got {k}")));
    }
    Ok(())
}

/// `(|f(x') - f(x)| / |x - x'|_2, f(x), f(x'))` for the given removal set.
fn removal_effect(model: &dyn Model, x: &[f64], removed: &[usize], baseline: &[f64]) -> Result<(f64, f64, f64)> {
    let nullified = nullify_with(x, removed, baseline)?;
    let dist = metrics::euclidean_distance(x, &nullified)?;
    if dist == 0.0 {
        let mut features = removed.to_vec();
        features.sort_unstable();
        return Err(Error::DegenerateNullification { features });
    }
    let which = model.default_output();
    let fx = model.output(x, which);
    let fn_ = model.output(&nullified, which);
    Ok(((fn_ - fx).abs() / dist, fx, fn_))
}

fn prepare(model: &dyn Model, x: &[f64], attribution: &Attribution, k: usize) -> Result<()> {
    if attribution.len() != x.len() || x.len() != model.n_features() {
        return Err(Error::validation("attribution, instance and model lengths differ"));
    }
    check_k(k, x.len())
}

/// Output change per unit input change after nullifying the `k` features
/// with the largest attribution magnitude. Larger is better.
pub fn importance_by_deletion(
    model: &dyn Model,
    x: &[f64],
    attribution: &Attribution,
    k: usize,
    strategy: &NullificationStrategy,
    ds: &Dataset,
) -> Result<f64> {
    prepare(model, x, attribution, k)?;
    let baseline = strategy.baseline(ds)?;
    Ok(removal_effect(model, x, &top_k(&attribution.scores, k), &baseline)?.0)
}

/// As [`importance_by_deletion`] for the `k` smallest magnitudes. Smaller
/// is better.
pub fn importance_by_preservation(
    model: &dyn Model,
    x: &[f64],
    attribution: &Attribution,
    k: usize,
    strategy: &NullificationStrategy,
    ds: &Dataset,
) -> Result<f64> {
    prepare(model, x, attribution, k)?;
    let baseline = strategy.baseline(ds)?;
    Ok(removal_effect(model, x, &bottom_k(&attribution.scores, k), &baseline)?.0)
}

/// `|f(x) - f(x with feature m nullified)|` for every feature separately.
pub fn per_feature_change(model: &dyn Model, x: &[f64], baseline: &[f64]) -> Vec<f64> {
    let which = model.default_output();
    let fx = model.output(x, which);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|m| {
            probe[m] = baseline[m];
            let v = (fx - model.output(&probe, which)).abs();
            probe[m] = x[m];
            v
        })
        .collect()
}

/// Deletion score together with the evidence needed to judge the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlameProbe {
    pub deletion: f64,
    pub f_x: f64,
    pub f_nullified: f64,
    pub removed: Vec<usize>,
    pub class_changed: bool,
    /// The prediction kept its class with confidence despite removing the
    /// top-K features: a low deletion score may indict the model rather
    /// than the explanation.
    pub oracle_suspect: bool,
}

pub const DEFAULT_CONFIDENCE_MARGIN: f64 = 0.1;

pub fn deletion_blame_probe(
    model: &dyn Model,
    x: &[f64],
    attribution: &Attribution,
    k: usize,
    strategy: &NullificationStrategy,
    ds: &Dataset,
    confidence_margin: f64,
) -> Result<BlameProbe> {
    prepare(model, x, attribution, k)?;
    let baseline = strategy.baseline(ds)?;
    let removed = top_k(&attribution.scores, k);
    let (deletion, _, _) = removal_effect(model, x, &removed, &baseline)?;
    let nullified = nullify_with(x, &removed, &baseline)?;
    let f_x = model.predict_proba(x);
    let f_nullified = model.predict_proba(&nullified);
    let class_changed = (f_x >= 0.5) != (f_nullified >= 0.5);
    Ok(BlameProbe {
        deletion,
        f_x,
        f_nullified,
        removed,
        class_changed,
        oracle_suspect: !class_changed && (f_nullified - 0.5).abs() > confidence_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    /// Ball radius in feature units.
    pub epsilon: f64,
    pub n_samples: usize,
}

impl ContinuityConfig {
    /// `epsilon = 0.1 * mean feature std`, 50 samples.
    pub fn default_for(ds: &Dataset) -> ContinuityConfig {
        let stds = ds.feature_stds();
        let mean_std = stds.iter().sum::<f64>() / stds.len() as f64;
        ContinuityConfig {
            epsilon: if mean_std > 0.0 { 0.1 * mean_std } else { 0.1 },
            n_samples: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::validation("continuity epsilon must be positive"));
        }
        if self.n_samples == 0 {
            return Err(Error::validation("continuity needs at least one sample"));
        }
        Ok(())
    }
}

/// Default K: a quarter of the features, rounded up.
pub fn default_k(m: usize) -> usize {
    m.div_ceil(4).max(1)
}

/// Quotients `|g(x) - g(x_j)| / |x - x_j|` for `x_j` uniform in the
/// epsilon ball, in draw order. The explainer sees the same internal seed
/// for `x` and every `x_j`.
pub fn continuity_quotients(
    model: &dyn Model,
    explainer: &Explainer,
    x: &[f64],
    cfg: &ContinuityConfig,
    seed: RunSeed,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let m = x.len();
    let explain = |z: &[f64]| {
        let mut rng = seed.derive_stream("robustness/continuity/explainer", 0);
        explainer.explain(model, z, &mut rng)
    };
    let gx = explain(x)?;
    let mut rng = seed.derive_stream("robustness/continuity/ball", 0);
    let mut out = Vec::with_capacity(cfg.n_samples);
    while out.len() < cfg.n_samples {
        let dir: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = cfg.epsilon * rng.random::<f64>().powf(1.0 / m as f64);
        if norm == 0.0 || radius == 0.0 {
            continue;
        }
        let xj: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + radius * d / norm).collect();
        let dx = metrics::euclidean_distance(x, &xj)?;
        if dx == 0.0 {
            continue;
        }
        let gj = explain(&xj)?;
        out.push(metrics::euclidean_distance(&gx.scores, &gj.scores)? / dx);
    }
    Ok(out)
}

/// Largest quotient over the sampled ball points.
pub fn continuity(model: &dyn Model, explainer: &Explainer, x: &[f64], cfg: &ContinuityConfig, seed: RunSeed) -> Result<f64> {
    Ok(continuity_quotients(model, explainer, x, cfg, seed)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Mean deletion score per explainer under one nullification strategy,
/// best (largest) first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRanking {
    pub strategy: String,
    pub ranking: Vec<(String, f64)>,
    /// Instances skipped because nullification changed nothing.
    pub degenerate: usize,
}

/// Ranks explainers by mean deletion score under each strategy.
/// `attributions` holds, per explainer, `(row index, attribution)` pairs.
pub fn rank_explainers_by_deletion(
    model: &dyn Model,
    ds: &Dataset,
    attributions: &[(String, Vec<(usize, Attribution)>)],
    k: usize,
    strategies: &[NullificationStrategy],
) -> Result<Vec<StrategyRanking>> {
    if strategies.is_empty() {
        return Err(Error::validation("at least one nullification strategy is required"));
    }
    strategies
        .iter()
        .map(|strategy| {
            let mut degenerate = 0;
            let mut ranking = Vec::with_capacity(attributions.len());
            for (name, atts) in attributions {
                let mut scores = Vec::with_capacity(atts.len());
                for (row, att) in atts {
                    match importance_by_deletion(model, ds.row(*row), att, k, strategy, ds) {
                        Ok(v) => scores.push(v),
                        Err(Error::DegenerateNullification { .. }) => degenerate += 1,
                        Err(e) => return Err(e),
                    }
                }
                ranking.push((name.clone(), metrics::mean(&scores)));
            }
            ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            Ok(StrategyRanking {
                strategy: strategy.name().to_owned(),
                ranking,
                degenerate,
            })
        })
        .collect()
}
