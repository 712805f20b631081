use serde::{Deserialize, Serialize};

use super::{require_both_classes, InitLaw, Model, ParameterBlock};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_VAR_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes for two classes. Index 0/1 of every per-class
/// array is the class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub var_floor: f64,
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

impl GaussianNbModel {
    /// `log N(x_m; mu_1m, var_1m) - log N(x_m; mu_0m, var_0m)`.
    pub fn feature_log_ratio(&self, m: usize, x: f64) -> f64 {
        log_normal_pdf(x, self.means[1][m], self.variances[1][m])
            - log_normal_pdf(x, self.means[0][m], self.variances[0][m])
    }

    pub fn prior_log_ratio(&self) -> f64 {
        (self.priors[1] / self.priors[0]).ln()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let m = self.means[0].len();
        let shapes_ok = [&self.means[1], &self.variances[0], &self.variances[1]]
            .iter()
            .all(|v| v.len() == m);
        if !shapes_ok {
            return Err(Error::validation("naive Bayes parameter arrays differ in length"));
        }
        if !self.priors.iter().all(|&p| p > 0.0 && p < 1.0) {
            return Err(Error::validation("naive Bayes priors must lie in (0, 1)"));
        }
        if self.variances.iter().flatten().any(|&v| !(v > 0.0)) {
            return Err(Error::validation("naive Bayes variances must be positive"));
        }
        Ok(())
    }

    pub(crate) fn parameter_block(&self) -> ParameterBlock {
        let values = self.means[0].iter().chain(&self.means[1]).copied().collect();
        ParameterBlock {
            name: "class_means".into(),
            values,
            init: InitLaw::StandardNormal,
        }
    }

    pub(crate) fn set_parameter_block(&mut self, values: &[f64]) -> Result<()> {
        let m = self.means[0].len();
        if values.len() != 2 * m {
            return Err(Error::validation(format!("expected {} values, got {}", 2 * m, values.len())));
        }
        self.means[0].copy_from_slice(&values[..m]);
        self.means[1].copy_from_slice(&values[m..]);
        Ok(())
    }
}

impl Model for GaussianNbModel {
    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    /// Log posterior odds of class 1.
    fn predict_margin(&self, x: &[f64]) -> f64 {
        self.prior_log_ratio()
            + x.iter()
                .enumerate()
                .map(|(m, &v)| self.feature_log_ratio(m, v))
                .sum::<f64>()
    }

    fn margin_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            x.iter()
                .enumerate()
                .map(|(m, &v)| {
                    -(v - self.means[1][m]) / self.variances[1][m] + (v - self.means[0][m]) / self.variances[0][m]
                })
                .collect(),
        )
    }
}

/// Class priors, per-class means and (population) variances, with
/// variances clamped to `var_floor`.
pub fn fit_gaussian_nb(ds: &Dataset, var_floor: f64) -> Result<GaussianNbModel> {
    require_both_classes(ds)?;
    if !(var_floor > 0.0) {
        return Err(Error::validation("variance floor must be positive"));
    }
    let m = ds.n_features();
    let counts = ds.class_counts();
    let mut means = [vec![0.0; m], vec![0.0; m]];
    for i in 0..ds.n_instances() {
        let c = ds.labels()[i] as usize;
        for (acc, v) in means[c].iter_mut().zip(ds.row(i)) {
            *acc += v;
        }
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|v| *v /= counts[c] as f64);
    }
    let mut variances = [vec![0.0; m], vec![0.0; m]];
    for i in 0..ds.n_instances() {
        let c = ds.labels()[i] as usize;
        for ((acc, v), mu) in variances[c].iter_mut().zip(ds.row(i)).zip(&means[c]) {
            *acc += (v - mu) * (v - mu);
        }
    }
    for c in 0..2 {
        variances[c]
            .iter_mut()
            .for_each(|v| *v = (*v / counts[c] as f64).max(var_floor));
    }
    let n = ds.n_instances() as f64;
    Ok(GaussianNbModel {
        priors: [counts[0] as f64 / n, counts[1] as f64 / n],
        means,
        variances,
        var_floor,
    })
}
