//! Trainable predictors used as explained models and as sources of
//! interpretable ground truth.
//!
//! Every classifier exposes class-1 probability and the log-odds margin,
//! with `predict_proba = sigmoid(predict_margin)`. [`LinearModel`] is a
//! regressor: its margin is the raw prediction and it is explained on that
//! scale by default.

mod gnb;
mod linear;
mod logistic;
mod mlp;
mod train;

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::StreamRng;

pub use gnb::{fit_gaussian_nb, GaussianNbModel, DEFAULT_VAR_FLOOR};
pub use linear::{fit_linear, fit_linear_dataset, LinearModel};
pub use logistic::{fit_logistic, fit_logistic_traced, LogisticModel};
pub use mlp::{fit_mlp, fit_mlp_traced, DenseLayer, MlpModel};
pub use train::TrainingMeta;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Which model output an explainer or measure consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Proba,
    Margin,
}

/// Capability contract shared by all predictors.
pub trait Model: Send + Sync {
    fn n_features(&self) -> usize;

    /// Log-odds of class 1 for classifiers, raw output for regressors.
    fn predict_margin(&self, x: &[f64]) -> f64;

    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.predict_margin(x))
    }

    fn is_classifier(&self) -> bool {
        true
    }

    /// Gradient of the margin, if the model is differentiable.
    fn margin_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Gradient of `predict_proba`.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let g = self.margin_gradient(x)?;
        let p = self.predict_proba(x);
        let s = p * (1.0 - p);
        Some(g.into_iter().map(|v| v * s).collect())
    }

    /// Output explained when nothing else is configured: probability for
    /// classifiers, raw prediction for regressors.
    fn default_output(&self) -> Output {
        if self.is_classifier() {
            Output::Proba
        } else {
            Output::Margin
        }
    }

    fn output(&self, x: &[f64], which: Output) -> f64 {
        match which {
            Output::Proba => self.predict_proba(x),
            Output::Margin => self.predict_margin(x),
        }
    }

    fn output_gradient(&self, x: &[f64], which: Output) -> Option<Vec<f64>> {
        match which {
            Output::Proba => self.gradient(x),
            Output::Margin => self.margin_gradient(x),
        }
    }
}

/// Elementwise `predict_proba` over the rows of `x`.
pub fn predict_batch(model: &dyn Model, x: &Array2<f64>) -> Result<Vec<f64>> {
    if x.nrows() == 0 {
        return Ok(Vec::new());
    }
    if x.ncols() != model.n_features() {
        return Err(Error::validation(format!(
            "batch has {} columns, model expects {}",
            x.ncols(),
            model.n_features()
        )));
    }
    Ok(x
        .rows()
        .into_iter()
        .map(|row| match row.as_slice() {
            Some(s) => model.predict_proba(s),
            None => model.predict_proba(&row.to_vec()),
        })
        .collect())
}

/// Fraction of rows whose thresholded `predict_proba` matches the label.
pub fn accuracy(model: &dyn Model, ds: &Dataset) -> f64 {
    let correct = (0..ds.n_instances())
        .filter(|&i| (model.predict_proba(ds.row(i)) >= 0.5) == (ds.labels()[i] == 1))
        .count();
    correct as f64 / ds.n_instances() as f64
}

/// Reinitialization law of a parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitLaw {
    /// Weights ~ N(0, 2 / (fan_in + fan_out)), trailing `n_bias` entries zero.
    GlorotNormal { fan_in: usize, fan_out: usize, n_bias: usize },
    /// Every entry ~ N(0, 1).
    StandardNormal,
}

impl InitLaw {
    pub fn draw(&self, len: usize, rng: &mut StreamRng) -> Vec<f64> {
        match *self {
            InitLaw::GlorotNormal { fan_in, fan_out, n_bias } => {
                let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
                let n_weights = len - n_bias;
                (0..len)
                    .map(|i| {
                        if i < n_weights {
                            std * rng.sample::<f64, _>(StandardNormal)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            InitLaw::StandardNormal => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }
}

/// A copy of one group of model parameters, ordered input side first.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBlock {
    pub name: String,
    pub values: Vec<f64>,
    pub init: InitLaw,
}

/// Any fitted model, tagged by kind for JSON persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Logistic(LogisticModel),
    Linear(LinearModel),
    GaussianNb(GaussianNbModel),
    Mlp(MlpModel),
}

impl FittedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            FittedModel::Logistic(_) => "logistic",
            FittedModel::Linear(_) => "linear",
            FittedModel::GaussianNb(_) => "gaussian_nb",
            FittedModel::Mlp(_) => "mlp",
        }
    }

    fn inner(&self) -> &dyn Model {
        match self {
            FittedModel::Logistic(m) => m,
            FittedModel::Linear(m) => m,
            FittedModel::GaussianNb(m) => m,
            FittedModel::Mlp(m) => m,
        }
    }

    /// Copies of the parameter groups, input side first.
    pub fn parameter_blocks(&self) -> Vec<ParameterBlock> {
        match self {
            FittedModel::Logistic(m) => vec![m.parameter_block()],
            FittedModel::Linear(m) => vec![m.parameter_block()],
            FittedModel::GaussianNb(m) => vec![m.parameter_block()],
            FittedModel::Mlp(m) => m.parameter_blocks(),
        }
    }

    /// New model with block `index` replaced by `values`.
    pub fn with_block(&self, index: usize, values: &[f64]) -> Result<FittedModel> {
        let n_blocks = self.parameter_blocks().len();
        if index >= n_blocks {
            return Err(Error::validation(format!(
                "block {index} out of range for a model with {n_blocks} blocks"
            )));
        }
        let mut out = self.clone();
        match &mut out {
            FittedModel::Logistic(m) => m.set_parameter_block(values)?,
            FittedModel::Linear(m) => m.set_parameter_block(values)?,
            FittedModel::GaussianNb(m) => m.set_parameter_block(values)?,
            FittedModel::Mlp(m) => m.set_parameter_block(index, values)?,
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<FittedModel> {
        let model: FittedModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FittedModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
        FittedModel::from_json(&text).map_err(|e| e.at_path(path))
    }

    fn validate(&self) -> Result<()> {
        let finite = self
            .parameter_blocks()
            .iter()
            .all(|b| b.values.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::validation("model parameters must be finite"));
        }
        match self {
            FittedModel::Logistic(_) | FittedModel::Linear(_) => Ok(()),
            FittedModel::GaussianNb(m) => m.validate(),
            FittedModel::Mlp(m) => m.validate(),
        }
    }
}

impl Model for FittedModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_margin(&self, x: &[f64]) -> f64 {
        self.inner().predict_margin(x)
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.inner().predict_proba(x)
    }

    fn is_classifier(&self) -> bool {
        self.inner().is_classifier()
    }

    fn margin_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner().margin_gradient(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner().gradient(x)
    }
}

fn require_both_classes(ds: &Dataset) -> Result<()> {
    let [zeros, ones] = ds.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(Error::validation("training data must contain both classes"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::RunSeed;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn predict_batch_matches_scalar_calls() {
        let model = LogisticModel::new(vec![0.7, -1.3, 0.2], 0.1);
        let mut rng = RunSeed(5).derive_stream("test", 0);
        let x = Array2::from_shape_fn((50, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let batch = predict_batch(&model, &x).unwrap();
        for (i, p) in batch.iter().enumerate() {
            let row = x.row(i).to_vec();
            assert!((p - model.predict_proba(&row)).abs() <= 1e-12);
        }
    }

    #[test]
    fn predict_batch_empty_and_mismatch() {
        let model = LogisticModel::new(vec![1.0, 2.0], 0.0);
        assert!(predict_batch(&model, &Array2::zeros((0, 2))).unwrap().is_empty());
        assert!(predict_batch(&model, &Array2::zeros((3, 5))).is_err());
    }

    #[test]
    fn json_round_trip_keeps_kind() {
        let model = FittedModel::Logistic(LogisticModel::new(vec![1.5, -0.25], 0.5));
        let json = model.to_json().unwrap();
        assert!(json.contains("\"kind\": \"logistic\""));
        assert_eq!(FittedModel::from_json(&json).unwrap(), model);
    }

    #[test]
    fn with_block_rejects_bad_index() {
        let model = FittedModel::Logistic(LogisticModel::new(vec![1.0], 0.0));
        assert!(model.with_block(1, &[0.0, 0.0]).is_err());
        assert!(model.with_block(0, &[0.0]).is_err());
    }
}
