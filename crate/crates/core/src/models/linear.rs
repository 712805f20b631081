use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{InitLaw, Model, ParameterBlock};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// Real-valued `bias + weights . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub l2: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LinearModel { weights, bias, l2: 0.0 }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
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

impl Model for LinearModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_margin(&self, x: &[f64]) -> f64 {
        self.predict(x)
    }

    fn is_classifier(&self) -> bool {
        false
    }

    fn margin_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.weights.clone())
    }
}

/// Ridge regression by the normal equations on centered data, so the
/// intercept is unpenalized.
pub fn fit_linear(x: &Array2<f64>, y: &[f64], l2: f64) -> Result<LinearModel> {
    let (n, m) = x.dim();
    if n == 0 || m == 0 || y.len() != n {
        return Err(Error::validation("fit_linear: empty or misaligned inputs"));
    }
    if !(l2 >= 0.0) {
        return Err(Error::validation("l2 must be non-negative"));
    }
    let x_mean: Vec<f64> = (0..m).map(|j| x.column(j).sum() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, m, |i, j| x[(i, j)] - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = xc.transpose() * &xc;
    for j in 0..m {
        gram[(j, j)] += l2;
    }
    let rhs = xc.transpose() * yc;
    let w = solve_spd(gram, rhs, false)
        .map_err(|_| Error::numeric("ridge normal equations are singular; add l2 > 0 or more rows"))?;
    let weights: Vec<f64> = w.iter().copied().collect();
    let bias = y_mean - weights.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok(LinearModel { weights, bias, l2 })
}

/// Linear probability model: ridge regression on the 0/1 labels.
pub fn fit_linear_dataset(ds: &Dataset, l2: f64) -> Result<LinearModel> {
    let y: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    fit_linear(ds.features(), &y, l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exact_interpolation() {
        let x = array![[1.0], [2.0], [-3.0], [0.5]];
        let y = [3.0, 6.0, -9.0, 1.5];
        let m = fit_linear(&x, &y, 0.0).unwrap();
        assert!((m.weights[0] - 3.0).abs() <= 1e-9);
        assert!(m.bias.abs() <= 1e-9);
    }

    #[test]
    fn constant_target() {
        let x = array![[1.0, 0.0], [2.0, 1.0], [-3.0, 4.0], [0.5, 2.0]];
        let m = fit_linear(&x, &[2.5; 4], 0.0).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-12));
        assert!((m.bias - 2.5).abs() < 1e-12);
    }

    #[test]
    fn singular_system() {
        let x = array![[1.0], [1.0]];
        assert!(matches!(fit_linear(&x, &[0.0, 1.0], 0.0), Err(Error::Numeric(_))));
        let x = array![[1.0]];
        assert!(fit_linear(&x, &[1.0], 0.0).is_err());
    }

    #[test]
    fn ridge_stationarity() {
        let x = array![[1.0, 2.0], [0.0, -1.0], [3.0, 0.5], [-2.0, 1.0], [0.3, 0.3]];
        let y = [1.0, -0.5, 2.0, 0.1, 0.7];
        let l2 = 0.3;
        let m = fit_linear(&x, &y, l2).unwrap();
        // gradient of sum (y - b - w.x)^2 + l2 |w|^2
        let mut grad = vec![0.0; 3];
        for i in 0..5 {
            let r = m.predict(&[x[(i, 0)], x[(i, 1)]]) - y[i];
            grad[0] += 2.0 * r * x[(i, 0)];
            grad[1] += 2.0 * r * x[(i, 1)];
            grad[2] += 2.0 * r;
        }
        grad[0] += 2.0 * l2 * m.weights[0];
        grad[1] += 2.0 * l2 * m.weights[1];
        assert!(grad.iter().all(|g| g.abs() <= 1e-8), "{grad:?}");
    }
}
