//! Small dense solvers shared by the model fitters and surrogate explainers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves the symmetric system `a x = b`, trying Cholesky first and
/// falling back to an SVD pseudo-inverse when `allow_pinv` is set.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: DVector<f64>, allow_pinv: bool) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        let x = chol.solve(&b);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    if !allow_pinv {
        return Err(Error::numeric("system matrix is singular or not positive definite"));
    }
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    svd.solve(&b, max_sv * 1e-12)
        .map_err(|e| Error::numeric(format!("pseudo-inverse solve failed: {e}")))
}

/// Weighted ridge regression with an unpenalized intercept.
///
/// Minimizes `sum_i w_i (y_i - b - x_i . beta)^2 + l2 |beta|^2` and returns
/// `(b, beta)`. Rows of `design` are samples.
pub(crate) fn weighted_ridge(
    design: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = design.len();
    if n == 0 || targets.len() != n || weights.len() != n {
        return Err(Error::validation("weighted ridge: inconsistent sample counts"));
    }
    let p = design[0].len();
    let total_w: f64 = weights.iter().sum();
    if !(total_w > 0.0) || !total_w.is_finite() {
        return Err(Error::numeric("weighted ridge: weights sum to zero"));
    }
    let mut x_mean = vec![0.0; p];
    let mut y_mean = 0.0;
    for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += w * v;
        }
        y_mean += w * y;
    }
    x_mean.iter_mut().for_each(|m| *m /= total_w);
    y_mean /= total_w;

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut centered = vec![0.0; p];
    for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
        for j in 0..p {
            centered[j] = row[j] - x_mean[j];
        }
        let yc = y - y_mean;
        for j in 0..p {
            let wj = w * centered[j];
            rhs[j] += wj * yc;
            for k in j..p {
                gram[(j, k)] += wj * centered[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            gram[(j, k)] = gram[(k, j)];
        }
        gram[(j, j)] += l2;
    }
    let beta = solve_spd(gram, rhs, false)?;
    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok((intercept, beta.iter().copied().collect()))
}
