use serde::{Deserialize, Serialize};

use super::train::{cross_entropy, gradient_descent, TrainingMeta};
use super::{require_both_classes, sigmoid, InitLaw, Model, ParameterBlock};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::RunSeed;

/// `log P(1|x)/P(0|x) = bias + weights . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub training: Option<TrainingMeta>,
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LogisticModel {
            weights,
            bias,
            training: None,
        }
    }

    pub fn log_odds(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub(crate) fn parameter_block(&self) -> ParameterBlock {
        let mut values = self.weights.clone();
        values.push(self.bias);
        ParameterBlock {
            name: "weights+bias".into(),
            values,
            init: InitLaw::GlorotNormal {
                fan_in: self.weights.len(),
                fan_out: 1,
                n_bias: 1,
            },
        }
    }

    pub(crate) fn set_parameter_block(&mut self, values: &[f64]) -> Result<()> {
        let m = self.weights.len();
        if values.len() != m + 1 {
            return Err(Error::validation(format!("expected {} values, got {}", m + 1, values.len())));
        }
        self.weights.copy_from_slice(&values[..m]);
        self.bias = values[m];
        Ok(())
    }
}

impl Model for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_margin(&self, x: &[f64]) -> f64 {
        self.log_odds(x)
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_odds(x))
    }

    fn margin_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.weights.clone())
    }
}

/// Same as [`fit_logistic`], also returning the per-epoch loss.
pub fn fit_logistic_traced(
    ds: &Dataset,
    lr: f64,
    epochs: usize,
    l2: f64,
    seed: RunSeed,
) -> Result<(LogisticModel, Vec<f64>)> {
    if ds.n_instances() < 2 {
        return Err(Error::validation("logistic regression needs at least two rows"));
    }
    require_both_classes(ds)?;
    if !(l2 >= 0.0) {
        return Err(Error::validation("l2 must be non-negative"));
    }
    let n = ds.n_instances();
    let m = ds.n_features();
    let init = InitLaw::GlorotNormal {
        fan_in: m,
        fan_out: 1,
        n_bias: 1,
    };
    let mut params = init.draw(m + 1, &mut seed.derive_stream("models/init", 0));
    let labels = ds.labels();
    let history = gradient_descent(&mut params, lr, epochs, |p, want_grad| {
        let (w, b) = p.split_at(m);
        let mut loss = 0.0;
        let mut grad = vec![0.0; if want_grad { m + 1 } else { 0 }];
        for i in 0..n {
            let x = ds.row(i);
            let z = b[0] + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
            loss += cross_entropy(z, labels[i]);
            if want_grad {
                let r = sigmoid(z) - f64::from(labels[i]);
                for (g, v) in grad.iter_mut().zip(x) {
                    *g += r * v;
                }
                grad[m] += r;
            }
        }
        let inv_n = 1.0 / n as f64;
        loss = loss * inv_n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        if want_grad {
            for j in 0..m {
                grad[j] = grad[j] * inv_n + l2 * w[j];
            }
            grad[m] *= inv_n;
        }
        (loss, grad)
    })?;
    let mut model = LogisticModel::new(params[..m].to_vec(), params[m]);
    model.training = Some(TrainingMeta {
        epochs,
        learning_rate: lr,
        l2,
        seed: seed.master(),
        initial_loss: history[0],
        final_loss: *history.last().expect("history has the initial loss"),
    });
    Ok((model, history))
}

/// L2-regularized cross-entropy minimized by full-batch gradient descent.
/// The bias is not regularized.
pub fn fit_logistic(ds: &Dataset, lr: f64, epochs: usize, l2: f64, seed: RunSeed) -> Result<LogisticModel> {
    fit_logistic_traced(ds, lr, epochs, l2, seed).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use ndarray::Array2;

    fn dataset(x: Vec<f64>, m: usize, labels: Vec<u8>) -> Dataset {
        let n = labels.len();
        Dataset::new(
            Array2::from_shape_vec((n, m), x).unwrap(),
            labels,
            Dataset::default_names(m),
            None,
            Provenance::new("test", serde_json::Value::Null, None),
        )
        .unwrap()
    }

    #[test]
    fn separable_one_dimensional_with_ridge() {
        let ds = dataset(vec![-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0], 1, vec![0, 0, 0, 0, 1, 1, 1, 1]);
        let (model, hist) = fit_logistic_traced(&ds, 1.0, 500, 0.01, RunSeed(1)).unwrap();
        assert!(model.weights[0].is_finite() && model.weights[0] > 0.0);
        assert_eq!(super::super::accuracy(&model, &ds), 1.0);
        assert!(hist.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = dataset(vec![0.0, 1.0, 2.0], 1, vec![1, 1, 1]);
        assert!(matches!(
            fit_logistic(&ds, 0.1, 10, 0.0, RunSeed(0)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn log_odds_identity() {
        let m = LogisticModel::new(vec![2.0, -1.0], 0.3);
        let x = [0.4, 1.7];
        assert_eq!(m.log_odds(&x), 0.3 + 2.0 * 0.4 - 1.7);
        assert!((sigmoid(m.log_odds(&x)) - m.predict_proba(&x)).abs() <= 1e-12);
    }
}
