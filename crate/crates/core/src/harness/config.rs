//! Versioned benchmark configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{load_dataset, Dataset, DatasetSchema};
use crate::error::{Error, Result};
use crate::explainers::ExplainerConfig;
use crate::groundtruth::BoundarySearch;
use crate::metrics::Metric;
use crate::models::{
    fit_gaussian_nb, fit_linear_dataset, fit_logistic, fit_mlp, FittedModel, DEFAULT_VAR_FLOOR,
};
use crate::randomization::{RandomizationMode, SanityThresholds};
use crate::robustness::NullificationStrategy;
use crate::seed::RunSeed;
use crate::synthdata::GeneratorSpec;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub version: u32,
    pub seed: u64,
    pub dataset: DatasetSource,
    pub model: ModelSpec,
    pub explainers: Vec<ExplainerConfig>,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    /// Where `run` writes the report; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Generate(GeneratorSpec),
    File { path: PathBuf },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Generate(g) => g.name().to_owned(),
            DatasetSource::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".to_owned()),
        }
    }

    pub fn load(&self, seed: RunSeed) -> Result<Dataset> {
        match self {
            DatasetSource::Generate(g) => g.generate(seed),
            DatasetSource::File { path } => load_dataset(path, &DatasetSchema::default()),
        }
    }
}

fn default_lr() -> f64 {
    0.5
}

fn default_epochs() -> usize {
    1000
}

fn default_l2() -> f64 {
    1e-3
}

fn default_var_floor() -> f64 {
    DEFAULT_VAR_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Logistic {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_l2")]
        l2: f64,
    },
    Linear {
        #[serde(default)]
        l2: f64,
    },
    GaussianNb {
        #[serde(default = "default_var_floor")]
        var_floor: f64,
    },
    Mlp {
        hidden: Vec<usize>,
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
    },
    /// A model saved by `train`.
    File { path: PathBuf },
}

impl ModelSpec {
    pub fn logistic_default() -> ModelSpec {
        ModelSpec::Logistic {
            learning_rate: default_lr(),
            epochs: default_epochs(),
            l2: default_l2(),
        }
    }

    pub fn fit(&self, ds: &Dataset, seed: RunSeed) -> Result<FittedModel> {
        Ok(match self {
            ModelSpec::Logistic { learning_rate, epochs, l2 } => {
                FittedModel::Logistic(fit_logistic(ds, *learning_rate, *epochs, *l2, seed)?)
            }
            ModelSpec::Linear { l2 } => FittedModel::Linear(fit_linear_dataset(ds, *l2)?),
            ModelSpec::GaussianNb { var_floor } => FittedModel::GaussianNb(fit_gaussian_nb(ds, *var_floor)?),
            ModelSpec::Mlp {
                hidden,
                learning_rate,
                epochs,
            } => FittedModel::Mlp(fit_mlp(ds, hidden, *learning_rate, *epochs, seed)?),
            ModelSpec::File { path } => FittedModel::load(path)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthMethod {
    Mias,
    Weights,
    Seneca,
    Generator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessMeasure {
    Deletion,
    Preservation,
    Continuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    pub measures: Vec<RobustnessMeasure>,
    /// Defaults to a quarter of the features, rounded up.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<NullificationStrategy>,
    /// Defaults to a tenth of the mean feature std.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_continuity_samples")]
    pub n_samples: usize,
}

fn default_strategies() -> Vec<NullificationStrategy> {
    vec![NullificationStrategy::DatasetMean, NullificationStrategy::Zero]
}

fn default_continuity_samples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizationSpec {
    pub mode: RandomizationMode,
    pub metric: Metric,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub thresholds: SanityThresholds,
}

fn default_seeds() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    /// Explain only the first `n` rows.
    #[serde(default)]
    pub max_instances: Option<usize>,
    #[serde(default)]
    pub ground_truth: Vec<GroundTruthMethod>,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub robustness: Option<RobustnessSpec>,
    #[serde(default)]
    pub randomization: Vec<RandomizationSpec>,
    #[serde(default)]
    pub boundary: Option<BoundarySearch>,
}

impl BenchmarkConfig {
    pub fn from_json(s: &str) -> Result<BenchmarkConfig> {
        let cfg: BenchmarkConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<BenchmarkConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        BenchmarkConfig::from_json(&text)
    }

    /// Checks that need no data or model.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        if self.explainers.is_empty() {
            return Err(Error::Config("at least one explainer is required".into()));
        }
        let eval = &self.evaluation;
        if !eval.ground_truth.is_empty() && eval.metrics.is_empty() {
            return Err(Error::Config("ground-truth evaluation needs at least one metric".into()));
        }
        if eval.max_instances == Some(0) {
            return Err(Error::Config("max_instances must be positive".into()));
        }
        for method in &eval.ground_truth {
            match (method, &self.model) {
                (GroundTruthMethod::Mias, ModelSpec::Mlp { .. }) => {
                    return Err(Error::Config("mias ground truth is not defined for mlp models".into()))
                }
                (GroundTruthMethod::Weights, m) if !matches!(m, ModelSpec::Logistic { .. } | ModelSpec::File { .. }) => {
                    return Err(Error::Config("weights ground truth needs a logistic model".into()))
                }
                (GroundTruthMethod::Seneca, _) if !matches!(&self.dataset, DatasetSource::Generate(GeneratorSpec::SenecaRc { .. })) => {
                    return Err(Error::Config("seneca ground truth needs a seneca_rc dataset".into()))
                }
                _ => {}
            }
        }
        if let Some(r) = &eval.robustness {
            if r.measures.is_empty() {
                return Err(Error::Config("robustness needs at least one measure".into()));
            }
            if r.strategies.is_empty() {
                return Err(Error::Config("robustness needs at least one nullification strategy".into()));
            }
            if r.k == Some(0) || r.n_samples == 0 || r.epsilon.is_some_and(|e| !(e > 0.0)) {
                return Err(Error::Config("robustness k, epsilon and n_samples must be positive".into()));
            }
        }
        if eval.randomization.iter().any(|r| r.seeds == 0) {
            return Err(Error::Config("randomization seeds must be positive".into()));
        }
        Ok(())
    }

    /// Compact JSON with sorted keys and without `output_dir`.
    pub fn canonical_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
        }
        Ok(serde_json::to_string(&value)?)
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "seed": 7,
        "dataset": {"generate": {"generator": "xor", "n": 50}},
        "model": {"kind": "logistic"},
        "explainers": [{"kind": "gradient_input"}]
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = BenchmarkConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.model, ModelSpec::logistic_default());
        assert!(cfg.evaluation.metrics.is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"seed\": 7,", "\"seed\": 7, \"sede\": 8,");
        assert!(matches!(BenchmarkConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("gradient_input", "saliency");
        assert!(matches!(BenchmarkConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_output_dir_and_whitespace() {
        let a = BenchmarkConfig::from_json(MINIMAL).unwrap();
        let mut b = BenchmarkConfig::from_json(&MINIMAL.replace('\n', " ")).unwrap();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = 8;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn incompatible_ground_truth_rejected() {
        let bad = MINIMAL.replace(
            "\"explainers\"",
            "\"evaluation\": {\"ground_truth\": [\"seneca\"], \"metrics\": [\"spearman\"]}, \"explainers\"",
        );
        assert!(matches!(BenchmarkConfig::from_json(&bad), Err(Error::Config(_))));
    }
}
