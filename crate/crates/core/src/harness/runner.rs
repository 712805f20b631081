//! Config-driven pipeline: generate, train, explain, evaluate.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{BenchmarkConfig, GroundTruthMethod, RandomizationSpec, RobustnessMeasure, RobustnessSpec};
use super::report::{format_value, EvaluationReport, InstanceKey, ReportRow, RunMetadata};
use crate::attribution::Attribution;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explainers::Explainer;
use crate::groundtruth::{self, GroundTruthScores};
use crate::metrics::{self, evaluate_against_gt};
use crate::models::{FittedModel, Model};
use crate::randomization::{plan_stages, sanity_check};
use crate::robustness::{
    self, continuity, importance_by_deletion, importance_by_preservation, ContinuityConfig,
};
use crate::seed::RunSeed;
use crate::synthdata::GeneratorSpec;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

type Explained = Vec<(usize, Attribution)>;

fn as_config(e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Config(m),
        e => e,
    }
}

/// Explains `rows` in parallel; row `i` always uses stream `(tag, i)`.
pub fn explain_rows(
    model: &dyn Model,
    explainer: &Explainer,
    ds: &Dataset,
    rows: &[usize],
    seed: RunSeed,
) -> Result<Explained> {
    let tag = explainer.config.seed_tag();
    rows.par_iter()
        .map(|&i| {
            let mut rng = seed.derive_stream(&tag, i as u64);
            Ok((i, explainer.explain(model, ds.row(i), &mut rng)?))
        })
        .collect()
}

fn aggregate_rows(explainer: &str, measure: &str, values: &[f64]) -> [ReportRow; 2] {
    let finite: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    [
        ReportRow::new("", "", explainer, InstanceKey::Mean, measure, metrics::mean(&finite), ""),
        ReportRow::new("", "", explainer, InstanceKey::Median, measure, metrics::median(&finite), ""),
    ]
}

fn ground_truths(
    method: GroundTruthMethod,
    cfg: &BenchmarkConfig,
    model: &FittedModel,
    ds: &Dataset,
    rows: &[usize],
) -> Result<Vec<(usize, GroundTruthScores)>> {
    let search = cfg.evaluation.boundary.unwrap_or_default();
    let polynomial = match &cfg.dataset {
        super::config::DatasetSource::Generate(GeneratorSpec::SenecaRc { polynomial, .. }) => Some(polynomial),
        _ => None,
    };
    rows.par_iter()
        .map(|&i| {
            let x = ds.row(i);
            let gt = match method {
                GroundTruthMethod::Mias => groundtruth::mias(model, x)?,
                GroundTruthMethod::Weights => match model {
                    FittedModel::Logistic(m) => groundtruth::weights_ground_truth(m),
                    other => {
                        return Err(Error::Unsupported(format!(
                            "weights ground truth needs a logistic model, got {}",
                            other.kind()
                        )))
                    }
                },
                GroundTruthMethod::Seneca => {
                    let poly = polynomial
                        .ok_or_else(|| Error::Config("seneca ground truth needs a seneca_rc dataset".into()))?;
                    groundtruth::seneca_ground_truth(model, poly, x, ds, &search)?
                }
                GroundTruthMethod::Generator => groundtruth::generator_ground_truth(ds, i)?,
            };
            Ok((i, gt))
        })
        .collect()
}

fn robustness_rows(
    spec: &RobustnessSpec,
    model: &FittedModel,
    ds: &Dataset,
    explainers: &[Explainer],
    explained: &[Explained],
    seed: RunSeed,
) -> Result<Vec<ReportRow>> {
    let m = ds.n_features();
    let k = spec.k.unwrap_or_else(|| robustness::default_k(m));
    if k > m {
        return Err(Error::Config(format!("robustness k = {k} exceeds {m} features")));
    }
    let mut continuity_cfg = ContinuityConfig::default_for(ds);
    continuity_cfg.n_samples = spec.n_samples;
    if let Some(eps) = spec.epsilon {
        continuity_cfg.epsilon = eps;
    }
    let mut rows = Vec::new();
    for (e, (explainer, atts)) in explainers.iter().zip(explained).enumerate() {
        let name = explainer.id();
        for measure in &spec.measures {
            let per_strategy: Vec<_> = match measure {
                RobustnessMeasure::Continuity => vec![None],
                _ => spec.strategies.iter().map(Some).collect(),
            };
            for strategy in per_strategy {
                let label = match (measure, strategy) {
                    (RobustnessMeasure::Deletion, Some(s)) => format!("deletion:{s}:k={k}"),
                    (RobustnessMeasure::Preservation, Some(s)) => format!("preservation:{s}:k={k}"),
                    _ => format!("continuity:eps={}", format_value(continuity_cfg.epsilon)),
                };
                let results: Vec<(f64, String)> = atts
                    .par_iter()
                    .map(|(i, att)| {
                        let x = ds.row(*i);
                        let r = match (measure, strategy) {
                            (RobustnessMeasure::Deletion, Some(s)) => importance_by_deletion(model, x, att, k, s, ds),
                            (RobustnessMeasure::Preservation, Some(s)) => {
                                importance_by_preservation(model, x, att, k, s, ds)
                            }
                            _ => continuity(
                                model,
                                explainer,
                                x,
                                &continuity_cfg,
                                seed.child("continuity", e as u64).child("instance", *i as u64),
                            ),
                        };
                        match r {
                            Ok(v) => Ok((v, String::new())),
                            Err(Error::DegenerateNullification { features }) => {
                                Ok((f64::NAN, format!("degenerate_nullification={features:?}")))
                            }
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<_>>()?;
                for ((i, _), (v, flags)) in atts.iter().zip(&results) {
                    rows.push(ReportRow::new("", "", name, InstanceKey::Index(*i), label.clone(), *v, flags.clone()));
                }
                let values: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
                rows.extend(aggregate_rows(name, &label, &values));
            }
        }
    }
    if spec.measures.contains(&RobustnessMeasure::Deletion) && explainers.len() > 1 {
        let named: Vec<(String, Explained)> = explainers
            .iter()
            .zip(explained)
            .map(|(ex, atts)| (ex.id().to_owned(), atts.clone()))
            .collect();
        for ranking in robustness::rank_explainers_by_deletion(model, ds, &named, k, &spec.strategies)? {
            for (rank, (name, mean)) in ranking.ranking.iter().enumerate() {
                rows.push(ReportRow::new(
                    "",
                    "",
                    name,
                    InstanceKey::Mean,
                    format!("deletion_rank:{}:k={k}", ranking.strategy),
                    (rank + 1) as f64,
                    format!("mean_deletion={};degenerate={}", format_value(*mean), ranking.degenerate),
                ));
            }
        }
    }
    Ok(rows)
}

fn randomization_rows(
    specs: &[RandomizationSpec],
    model: &FittedModel,
    sample: &Dataset,
    explainers: &[Explainer],
    seed: RunSeed,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (r, spec) in specs.iter().enumerate() {
        for s in 0..spec.seeds {
            let plan_seed = seed.child("randomization", r as u64).child("seed", s as u64);
            let plans = plan_stages(model, spec.mode, plan_seed);
            for (e, explainer) in explainers.iter().enumerate() {
                let report = sanity_check(
                    model,
                    explainer,
                    sample,
                    &plans,
                    &spec.metric,
                    seed.child("explain", e as u64),
                    &spec.thresholds,
                )?;
                for stage in &report.stages {
                    let measure = format!("sanity:{}:{}:seed={s}", stage.label, spec.metric);
                    for (i, v) in stage.similarities.iter().enumerate() {
                        rows.push(ReportRow::new("", "", explainer.id(), InstanceKey::Index(i), measure.clone(), *v, ""));
                    }
                    rows.push(ReportRow::new(
                        "",
                        "",
                        explainer.id(),
                        InstanceKey::Mean,
                        measure,
                        stage.mean_similarity,
                        format!(
                            "verdict={};retained_accuracy={};original_accuracy={}",
                            stage.verdict,
                            format_value(stage.retained_accuracy),
                            format_value(report.original_accuracy)
                        ),
                    ));
                }
            }
        }
    }
    Ok(rows)
}

/// Runs the configured pipeline. Errors carry the failing stage. When the
/// config names an output directory the report is written there.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<EvaluationReport> {
    let start = Instant::now();
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let config_hash = cfg.hash().map_err(|e| e.in_stage("config"))?;
    let seed = RunSeed::new(cfg.seed);

    let ds = cfg.dataset.load(seed.child("data", 0)).map_err(|e| e.in_stage("data"))?;
    let explainers: Vec<Explainer> = cfg
        .explainers
        .iter()
        .map(|c| Explainer::new(c.clone(), &ds).map_err(as_config))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("config"))?;

    let model = cfg.model.fit(&ds, seed.child("train", 0)).map_err(|e| e.in_stage("train"))?;
    if model.n_features() != ds.n_features() {
        return Err(Error::validation(format!(
            "model expects {} features, dataset has {}",
            model.n_features(),
            ds.n_features()
        ))
        .in_stage("train"));
    }

    let n = cfg.evaluation.max_instances.unwrap_or(usize::MAX).min(ds.n_instances());
    let rows_idx: Vec<usize> = (0..n).collect();
    let explained: Vec<Explained> = explainers
        .iter()
        .enumerate()
        .map(|(e, ex)| explain_rows(&model, ex, &ds, &rows_idx, seed.child("explain", e as u64)))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("explain"))?;

    let evaluate = || -> Result<Vec<ReportRow>> {
        let eval = &cfg.evaluation;
        let mut rows = Vec::new();
        for method in &eval.ground_truth {
            let gts = ground_truths(*method, cfg, &model, &ds, &rows_idx)?;
            for atts in &explained {
                rows.extend(evaluate_against_gt(atts, &gts, &eval.metrics)?);
            }
        }
        if let Some(spec) = &eval.robustness {
            rows.extend(robustness_rows(spec, &model, &ds, &explainers, &explained, seed)?);
        }
        if !eval.randomization.is_empty() {
            let sample = ds.select(&rows_idx)?;
            rows.extend(randomization_rows(&eval.randomization, &model, &sample, &explainers, seed)?);
        }
        Ok(rows)
    };
    let dataset_name = cfg.dataset.name();
    let rows = evaluate()
        .map_err(|e| e.in_stage("evaluate"))?
        .into_iter()
        .map(|r| r.tagged(&dataset_name, model.kind()))
        .collect();

    let report = EvaluationReport {
        rows,
        metadata: RunMetadata {
            config_hash,
            seed: cfg.seed,
            tool_version: TOOL_VERSION.to_owned(),
        },
        wall_time_ms: Some(start.elapsed().as_millis()),
    };
    if let Some(dir) = &cfg.output_dir {
        report.write(dir).map_err(|e| e.in_stage("report"))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"{
        "version": 1,
        "seed": 11,
        "dataset": {"generate": {"generator": "seneca_rc", "n": 120, "noise": 0.3,
            "polynomial": {"terms": [{"coefficient": 2.0, "feature": 0, "transform": "identity"},
                                     {"coefficient": -1.0, "feature": 1, "transform": "identity"}]}}},
        "model": {"kind": "logistic"},
        "explainers": [{"kind": "gradient_input"}, {"kind": "random"}],
        "evaluation": {"ground_truth": ["mias", "seneca"], "metrics": ["spearman"],
                       "robustness": {"measures": ["deletion", "preservation"]}}
    }"#;

    #[test]
    fn pipeline_smoke() {
        let cfg = BenchmarkConfig::from_json(CFG).unwrap();
        let report = run_benchmark(&cfg).unwrap();
        let mias: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.explainer == "gradient_input" && r.measure == "gt:mias_logistic/spearman")
            .collect();
        assert_eq!(mias.len(), 122);
        assert!(report.rows.iter().all(|r| r.dataset == "seneca_rc" && r.model == "logistic"));
        assert!(report.rows.iter().any(|r| r.measure.starts_with("deletion_rank:dataset_mean")));
    }

    #[test]
    fn unknown_explainer_is_a_config_error() {
        let bad = CFG.replace("\"random\"", "\"saliency\"");
        let err = BenchmarkConfig::from_json(&bad).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn stage_is_reported() {
        let mut cfg = BenchmarkConfig::from_json(CFG).unwrap();
        cfg.explainers[0].n_samples = 1;
        cfg.explainers[0].kind = crate::explainers::ExplainerKind::Lime;
        match run_benchmark(&cfg) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "config");
                assert!(matches!(*source, Error::Config(_)));
            }
            other => panic!("expected a config stage error, got {other:?}"),
        }
    }
}
