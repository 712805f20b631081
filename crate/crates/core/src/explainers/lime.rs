use rand::Rng;
use rand_distr::StandardNormal;

use super::{ExplainerConfig, ExplainerKind};
use crate::attribution::Attribution;
use crate::error::Result;
use crate::linalg::weighted_ridge;
use crate::models::Model;
use crate::seed::StreamRng;

/// Local linear surrogate `g(z) = value_at_x + coefficients . (z - x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeSurrogate {
    pub x: Vec<f64>,
    pub value_at_x: f64,
    /// Slopes in raw feature units.
    pub coefficients: Vec<f64>,
}

impl LimeSurrogate {
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.value_at_x
            + self
                .coefficients
                .iter()
                .zip(z.iter().zip(&self.x))
                .map(|(b, (zi, xi))| b * (zi - xi))
                .sum::<f64>()
    }
}

/// Fits the weighted ridge surrogate around `x`.
///
/// Perturbations are `z = x + std * eps` with `eps ~ N(0, I)`; each is
/// weighted by `exp(-|eps|^2 / width^2)`. The regression runs on `eps`, so
/// the ridge penalty and kernel are scale free. Features with zero
/// dataset spread get a zero slope.
pub fn lime_surrogate(
    model: &dyn Model,
    x: &[f64],
    feature_stds: &[f64],
    cfg: &ExplainerConfig,
    rng: &mut StreamRng,
) -> Result<LimeSurrogate> {
    let m = x.len();
    cfg.validate(m)?;
    let output = cfg.output_for(model);
    let width = cfg.kernel_width_for(m);
    let mut design = Vec::with_capacity(cfg.n_samples);
    let mut targets = Vec::with_capacity(cfg.n_samples);
    let mut weights = Vec::with_capacity(cfg.n_samples);
    let mut z = vec![0.0; m];
    for _ in 0..cfg.n_samples {
        let eps: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for j in 0..m {
            z[j] = x[j] + feature_stds[j] * eps[j];
        }
        let d2: f64 = eps.iter().map(|e| e * e).sum();
        targets.push(model.output(&z, output));
        weights.push((-d2 / (width * width)).exp());
        design.push(eps);
    }
    let (value_at_x, gamma) = weighted_ridge(&design, &targets, &weights, cfg.ridge_l2)?;
    let coefficients = gamma
        .iter()
        .zip(feature_stds)
        .map(|(g, &s)| if s > 0.0 { g / s } else { 0.0 })
        .collect();
    Ok(LimeSurrogate {
        x: x.to_vec(),
        value_at_x,
        coefficients,
    })
}

/// LIME attribution in contribution form: `score_m = beta_m (x_m - b_m)`
/// with base value `g(b)` for the neutral point `b`.
pub fn lime_explain(
    model: &dyn Model,
    x: &[f64],
    neutral: &[f64],
    feature_stds: &[f64],
    cfg: &ExplainerConfig,
    rng: &mut StreamRng,
) -> Result<Attribution> {
    let s = lime_surrogate(model, x, feature_stds, cfg, rng)?;
    let scores: Vec<f64> = s
        .coefficients
        .iter()
        .zip(x.iter().zip(neutral))
        .map(|(b, (xi, ni))| b * (xi - ni))
        .collect();
    let base = s.predict(neutral);
    Attribution::new(scores, Some(base), ExplainerKind::Lime.name())
}
