use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;

use super::{ExplainerConfig, ExplainerKind};
use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::models::{Model, Output};
use crate::seed::StreamRng;

/// Largest feature count accepted by [`exact_shapley`].
pub const MAX_EXACT_FEATURES: usize = 15;

/// Largest feature count for which [`kernel_shap`] may enumerate every
/// coalition.
const MAX_ENUMERATED_FEATURES: usize = 15;

/// Coalition value: model output with features outside `on` set to the
/// background.
fn coalition_value(model: &dyn Model, x: &[f64], background: &[f64], on: &[bool], output: Output) -> f64 {
    let z: Vec<f64> = on
        .iter()
        .enumerate()
        .map(|(j, &keep)| if keep { x[j] } else { background[j] })
        .collect();
    model.output(&z, output)
}

fn mask_bits(mask: usize, m: usize) -> Vec<bool> {
    (0..m).map(|j| mask >> j & 1 == 1).collect()
}

fn check_lengths(model: &dyn Model, x: &[f64], background: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != background.len() || x.len() != model.n_features() {
        return Err(Error::validation(format!(
            "instance ({}), background ({}) and model ({}) lengths differ",
            x.len(),
            background.len(),
            model.n_features()
        )));
    }
    Ok(())
}

/// Shapley values by enumerating all `2^M` coalitions.
pub fn exact_shapley(model: &dyn Model, x: &[f64], background: &[f64], output: Output) -> Result<Attribution> {
    check_lengths(model, x, background)?;
    let m = x.len();
    if m > MAX_EXACT_FEATURES {
        return Err(Error::Unsupported(format!(
            "exact Shapley values need at most {MAX_EXACT_FEATURES} features, got {m}"
        )));
    }
    let values: Vec<f64> = (0..1usize << m)
        .map(|mask| coalition_value(model, x, background, &mask_bits(mask, m), output))
        .collect();
    // weight[s] = s! (M - s - 1)! / M!
    let mut weight = vec![0.0; m];
    for (s, w) in weight.iter_mut().enumerate() {
        let mut v = 1.0 / m as f64;
        for i in 1..=s {
            v *= i as f64 / (m - i) as f64;
        }
        *w = v;
    }
    let mut phi = vec![0.0; m];
    for mask in 0..1usize << m {
        let size = mask.count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                *p += weight[size] * (values[mask | 1 << j] - values[mask]);
            }
        }
    }
    Attribution::new(phi, Some(values[0]), ExplainerKind::ExactShapley.name())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coalitions with their regression weights: every proper nonempty subset
/// when it fits in the budget, otherwise paired samples drawn with the
/// Shapley kernel as sampling law.
fn coalitions(m: usize, budget: usize, rng: &mut StreamRng) -> Vec<(Vec<bool>, f64)> {
    if m <= MAX_ENUMERATED_FEATURES && (1usize << m) - 2 <= budget {
        return (1..(1usize << m) - 1)
            .map(|mask| {
                let s = mask.count_ones() as usize;
                let w = (m - 1) as f64 / (binomial(m, s) * (s * (m - s)) as f64);
                (mask_bits(mask, m), w)
            })
            .collect();
    }
    let size_weight: Vec<f64> = (1..m).map(|s| 1.0 / (s * (m - s)) as f64).collect();
    let total: f64 = size_weight.iter().sum();
    let mut out = Vec::with_capacity(budget + 1);
    while out.len() < budget {
        let mut u = rng.random::<f64>() * total;
        let mut size = m - 1;
        for (i, w) in size_weight.iter().enumerate() {
            if u < *w {
                size = i + 1;
                break;
            }
            u -= w;
        }
        let mut on = vec![false; m];
        for j in sample(rng, m, size) {
            on[j] = true;
        }
        let complement: Vec<bool> = on.iter().map(|b| !b).collect();
        out.push((on, 1.0));
        out.push((complement, 1.0));
    }
    out
}

/// Kernel SHAP: Shapley-kernel weighted least squares over coalitions,
/// constrained so that `base + sum(scores) = f(x)` exactly, with
/// `base = f(background)`.
pub fn kernel_shap(
    model: &dyn Model,
    x: &[f64],
    background: &[f64],
    cfg: &ExplainerConfig,
    rng: &mut StreamRng,
) -> Result<Attribution> {
    check_lengths(model, x, background)?;
    let m = x.len();
    cfg.validate(m)?;
    let output = cfg.output_for(model);
    let v0 = model.output(background, output);
    let delta = model.output(x, output) - v0;
    if m == 1 {
        return Attribution::new(vec![delta], Some(v0), ExplainerKind::KernelShap.name());
    }

    // Eliminate the last feature: phi_last = delta - sum(phi_rest).
    let p = m - 1;
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut d = vec![0.0; p];
    for (on, w) in coalitions(m, cfg.n_samples, rng) {
        let last = if on[p] { 1.0 } else { 0.0 };
        let y = coalition_value(model, x, background, &on, output) - v0 - last * delta;
        for j in 0..p {
            d[j] = if on[j] { 1.0 } else { 0.0 } - last;
        }
        for j in 0..p {
            if d[j] == 0.0 {
                continue;
            }
            rhs[j] += w * d[j] * y;
            for k in 0..p {
                gram[(j, k)] += w * d[j] * d[k];
            }
        }
    }
    let rest = solve_spd(gram, rhs, true)?;
    let mut phi: Vec<f64> = rest.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Attribution::new(phi, Some(v0), ExplainerKind::KernelShap.name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use crate::seed::RunSeed;

    struct Sum;

    impl Model for Sum {
        fn n_features(&self) -> usize {
            2
        }
        fn predict_margin(&self, x: &[f64]) -> f64 {
            x[0] + x[1]
        }
        fn is_classifier(&self) -> bool {
            false
        }
    }

    struct Product;

    impl Model for Product {
        fn n_features(&self) -> usize {
            3
        }
        fn predict_margin(&self, x: &[f64]) -> f64 {
            x[0] * x[1] + 0.5 * x[2] * x[2]
        }
    }

    #[test]
    fn exact_symmetry_two_features() {
        let att = exact_shapley(&Sum, &[1.0, 1.0], &[0.0, 0.0], Output::Margin).unwrap();
        assert_eq!(att.scores, vec![1.0, 1.0]);
        assert_eq!(att.base_value, Some(0.0));
    }

    #[test]
    fn exact_shapley_of_product_splits_interaction() {
        let att = exact_shapley(&Product, &[2.0, 3.0, 1.0], &[0.0; 3], Output::Margin).unwrap();
        assert!((att.scores[0] - 3.0).abs() < 1e-12);
        assert!((att.scores[1] - 3.0).abs() < 1e-12);
        assert!((att.scores[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_enumeration_equals_exact() {
        let mut rng = RunSeed(0).derive_stream("ks", 0);
        let cfg = ExplainerConfig::new(ExplainerKind::KernelShap);
        for out in [Output::Margin, Output::Proba] {
            let mut c = cfg.clone();
            c.output = Some(out);
            let x = [2.0, -1.0, 0.5];
            let bg = [0.3, 0.2, -0.1];
            let a = kernel_shap(&Product, &x, &bg, &c, &mut rng).unwrap();
            let b = exact_shapley(&Product, &x, &bg, out).unwrap();
            for (u, v) in a.scores.iter().zip(&b.scores) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampled_kernel_shap_is_complete_and_linear_exact() {
        let w: Vec<f64> = (0..20).map(|j| (j as f64 - 9.5) / 3.0).collect();
        let model = LinearModel::new(w.clone(), 0.7);
        let x: Vec<f64> = (0..20).map(|j| (j as f64).sin()).collect();
        let bg = vec![0.1; 20];
        let mut cfg = ExplainerConfig::new(ExplainerKind::KernelShap);
        cfg.n_samples = 400;
        let mut rng = RunSeed(9).derive_stream("ks", 0);
        let att = kernel_shap(&model, &x, &bg, &cfg, &mut rng).unwrap();
        assert!(att.completeness_residual(model.predict(&x)).unwrap() < 1e-9);
        for j in 0..20 {
            assert!((att.scores[j] - w[j] * (x[j] - bg[j])).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_rejects_wide_inputs() {
        let model = LinearModel::new(vec![1.0; 16], 0.0);
        assert!(exact_shapley(&model, &[0.0; 16], &[0.0; 16], Output::Margin).is_err());
    }
}
