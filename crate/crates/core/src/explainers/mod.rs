//! Local attribution techniques.
//!
//! All explainers return scores in contribution form. Surrogate and
//! Shapley explainers also report a base value such that
//! `base + sum(scores)` reproduces (LIME: approximates) the explained
//! output at `x`.

mod lime;
mod shapley;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attribution::Attribution;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{Model, Output};
use crate::seed::StreamRng;

pub use lime::{lime_explain, lime_surrogate, LimeSurrogate};
pub use shapley::{exact_shapley, kernel_shap, MAX_EXACT_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainerKind {
    Lime,
    KernelShap,
    ExactShapley,
    Occlusion,
    GradientInput,
    Random,
}

impl ExplainerKind {
    pub const ALL: [ExplainerKind; 6] = [
        ExplainerKind::Lime,
        ExplainerKind::KernelShap,
        ExplainerKind::ExactShapley,
        ExplainerKind::Occlusion,
        ExplainerKind::GradientInput,
        ExplainerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExplainerKind::Lime => "lime",
            ExplainerKind::KernelShap => "kernel_shap",
            ExplainerKind::ExactShapley => "exact_shapley",
            ExplainerKind::Occlusion => "occlusion",
            ExplainerKind::GradientInput => "gradient_input",
            ExplainerKind::Random => "random",
        }
    }

    /// Whether the method fits a sampled surrogate.
    pub fn is_surrogate(self) -> bool {
        matches!(self, ExplainerKind::Lime | ExplainerKind::KernelShap)
    }
}

impl fmt::Display for ExplainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExplainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExplainerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown explainer `{s}`")))
    }
}

/// Reference point for feature removal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Background {
    Named(NamedBackground),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedBackground {
    #[serde(rename = "dataset-mean")]
    DatasetMean,
}

impl Default for Background {
    fn default() -> Self {
        Background::Named(NamedBackground::DatasetMean)
    }
}

impl Background {
    pub fn resolve(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            Background::Named(NamedBackground::DatasetMean) => Ok(ds.feature_means()),
            Background::Vector(v) => {
                if v.len() != ds.n_features() {
                    return Err(Error::Config(format!(
                        "background has {} values, dataset has {} features",
                        v.len(),
                        ds.n_features()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config("background must be finite".into()));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainerConfig {
    pub kind: ExplainerKind,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Kernel width in standardized units; `0.75 * sqrt(M)` when absent.
    #[serde(default)]
    pub kernel_width: Option<f64>,
    #[serde(default = "default_ridge_l2")]
    pub ridge_l2: f64,
    #[serde(default)]
    pub background: Background,
    /// Explained output; the model's default when absent.
    #[serde(default)]
    pub output: Option<Output>,
    /// Stream tag for per-instance randomness; the kind name when absent.
    #[serde(default)]
    pub seed_tag: Option<String>,
}

fn default_n_samples() -> usize {
    2000
}

fn default_ridge_l2() -> f64 {
    1e-3
}

impl ExplainerConfig {
    pub fn new(kind: ExplainerKind) -> Self {
        ExplainerConfig {
            kind,
            n_samples: default_n_samples(),
            kernel_width: None,
            ridge_l2: default_ridge_l2(),
            background: Background::default(),
            output: None,
            seed_tag: None,
        }
    }

    pub fn id(&self) -> &'static str {
        self.kind.name()
    }

    pub fn seed_tag(&self) -> String {
        self.seed_tag
            .clone()
            .unwrap_or_else(|| format!("explain/{}", self.kind))
    }

    pub fn kernel_width_for(&self, m: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (m as f64).sqrt())
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.kind.is_surrogate() && self.n_samples < n_features + 2 {
            return Err(Error::validation(format!(
                "{} needs at least {} samples for {} features, got {}",
                self.kind,
                n_features + 2,
                n_features,
                self.n_samples
            )));
        }
        if let Some(w) = self.kernel_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::validation("kernel_width must be positive"));
            }
        }
        if !(self.ridge_l2 >= 0.0 && self.ridge_l2.is_finite()) {
            return Err(Error::validation("ridge_l2 must be nonnegative"));
        }
        Ok(())
    }

    pub fn output_for(&self, model: &dyn Model) -> Output {
        self.output.unwrap_or_else(|| model.default_output())
    }
}

/// An explainer bound to the dataset statistics it needs.
#[derive(Debug, Clone)]
pub struct Explainer {
    pub config: ExplainerConfig,
    background: Vec<f64>,
    feature_stds: Vec<f64>,
}

impl Explainer {
    pub fn new(config: ExplainerConfig, ds: &Dataset) -> Result<Self> {
        config.validate(ds.n_features())?;
        let background = config.background.resolve(ds)?;
        Ok(Explainer {
            config,
            background,
            feature_stds: ds.feature_stds(),
        })
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    pub fn id(&self) -> &'static str {
        self.config.id()
    }

    /// Attribution for `x`. `rng` is only consumed by sampling methods.
    pub fn explain(&self, model: &dyn Model, x: &[f64], rng: &mut StreamRng) -> Result<Attribution> {
        if x.len() != model.n_features() || x.len() != self.background.len() {
            return Err(Error::validation(format!(
                "instance has {} features, model expects {}",
                x.len(),
                model.n_features()
            )));
        }
        let output = self.config.output_for(model);
        match self.config.kind {
            ExplainerKind::Lime => lime_explain(model, x, &self.background, &self.feature_stds, &self.config, rng),
            ExplainerKind::KernelShap => kernel_shap(model, x, &self.background, &self.config, rng),
            ExplainerKind::ExactShapley => exact_shapley(model, x, &self.background, output),
            ExplainerKind::Occlusion => occlusion_importance(model, x, &self.background, output),
            ExplainerKind::GradientInput => gradient_input(model, x, output),
            ExplainerKind::Random => random_attribution(x.len(), rng),
        }
    }
}

/// `score_m = f(x) - f(x with feature m set to baseline_m)`.
pub fn occlusion_importance(model: &dyn Model, x: &[f64], baseline: &[f64], output: Output) -> Result<Attribution> {
    let fx = model.output(x, output);
    let mut probe = x.to_vec();
    let scores = (0..x.len())
        .map(|m| {
            probe[m] = baseline[m];
            let v = fx - model.output(&probe, output);
            probe[m] = x[m];
            v
        })
        .collect();
    Attribution::new(scores, None, ExplainerKind::Occlusion.name())
}

/// `score_m = df/dx_m * x_m`.
pub fn gradient_input(model: &dyn Model, x: &[f64], output: Output) -> Result<Attribution> {
    let grad = model
        .output_gradient(x, output)
        .ok_or_else(|| Error::Unsupported("model does not expose gradients".into()))?;
    Attribution::new(
        grad.iter().zip(x).map(|(g, v)| g * v).collect(),
        None,
        ExplainerKind::GradientInput.name(),
    )
}

/// iid standard normal scores, ignoring the model.
pub fn random_attribution(m: usize, rng: &mut StreamRng) -> Result<Attribution> {
    Attribution::new(
        (0..m).map(|_| rng.sample(StandardNormal)).collect(),
        None,
        ExplainerKind::Random.name(),
    )
}
