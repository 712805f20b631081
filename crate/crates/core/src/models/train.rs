use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Numerically stable `log(1 + exp(z))`.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Cross-entropy of a class-1 margin against a 0/1 label.
pub(crate) fn cross_entropy(margin: f64, label: u8) -> f64 {
    softplus(margin) - f64::from(label) * margin
}

/// Full-batch gradient descent. A step that would raise the loss is
/// retried with half the step size, so the recorded loss sequence never
/// increases. Returns the loss after each epoch, starting with the initial
/// loss.
pub(crate) fn gradient_descent<F>(params: &mut [f64], lr: f64, epochs: usize, mut loss_grad: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], bool) -> (f64, Vec<f64>),
{
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::validation(format!("learning rate must be positive, got {lr}")));
    }
    let (mut loss, mut grad) = loss_grad(params, true);
    if !loss.is_finite() {
        return Err(Error::numeric("initial training loss is not finite"));
    }
    let mut history = Vec::with_capacity(epochs + 1);
    history.push(loss);
    let mut step = lr;
    let mut candidate = params.to_vec();
    for _ in 0..epochs {
        let mut accepted = false;
        for _ in 0..60 {
            for ((c, p), g) in candidate.iter_mut().zip(params.iter()).zip(&grad) {
                *c = p - step * g;
            }
            let (new_loss, _) = loss_grad(&candidate, false);
            if new_loss.is_finite() && new_loss <= loss {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent direction left at machine precision
            history.push(loss);
            continue;
        }
        params.copy_from_slice(&candidate);
        let (l, g) = loss_grad(params, true);
        if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("training diverged"));
        }
        loss = l;
        grad = g;
        history.push(loss);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for z in [-20.0, -1.0, 0.0, 0.5, 3.0, 20.0] {
            let naive = (1.0f64 + f64::exp(z)).ln();
            assert!((softplus(z) - naive).abs() < 1e-12);
        }
        assert_eq!(softplus(1000.0), 1000.0);
    }

    #[test]
    fn descends_quadratic_even_with_large_step() {
        let mut p = vec![5.0];
        let hist = gradient_descent(&mut p, 10.0, 50, |x, _| (x[0] * x[0], vec![2.0 * x[0]])).unwrap();
        assert!(hist.windows(2).all(|w| w[1] <= w[0]));
        assert!(p[0].abs() < 1e-6);
    }
}
