//! Reference importance scores.
//!
//! Three sources are supported:
//! * additive terms of an interpretable model's log-odds (or prediction),
//!   `lambda_m = w_m * x_m` for logistic and linear models and the
//!   per-feature log density ratio for Gaussian naive Bayes;
//! * the model weight vector itself, identical for every instance;
//! * the derivative of a generating polynomial evaluated at the closest
//!   point on the model's decision boundary.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{FittedModel, GaussianNbModel, LinearModel, LogisticModel, Model};
use crate::synthdata::PolynomialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtProvenance {
    MiasLogistic,
    MiasLinear,
    MiasGnb,
    ModelWeights,
    Generator,
    SenecaRc,
}

impl fmt::Display for GtProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GtProvenance::MiasLogistic => "mias_logistic",
            GtProvenance::MiasLinear => "mias_linear",
            GtProvenance::MiasGnb => "mias_gnb",
            GtProvenance::ModelWeights => "model_weights",
            GtProvenance::Generator => "generator",
            GtProvenance::SenecaRc => "seneca_rc",
        })
    }
}

impl std::str::FromStr for GtProvenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::validation(format!("unknown ground-truth provenance `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthScores {
    pub values: Vec<f64>,
    /// Additive intercept, when the source has one.
    pub intercept: Option<f64>,
    pub provenance: GtProvenance,
    pub target: u8,
}

impl GroundTruthScores {
    fn new(values: Vec<f64>, intercept: Option<f64>, provenance: GtProvenance) -> Self {
        GroundTruthScores {
            values,
            intercept,
            provenance,
            target: 1,
        }
    }

    /// `intercept + sum(values)`.
    pub fn total(&self) -> f64 {
        self.intercept.unwrap_or(0.0) + self.values.iter().sum::<f64>()
    }

    /// Values divided by their largest magnitude; zero vectors are returned
    /// unchanged.
    pub fn normalized_linf(&self) -> GroundTruthScores {
        let max = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut out = self.clone();
        if max > 0.0 {
            out.values.iter_mut().for_each(|v| *v /= max);
            out.intercept = out.intercept.map(|b| b / max);
        }
        out
    }
}

/// `lambda_m = w_m x_m`, intercept = bias; sums to the log-odds.
pub fn mias_logistic(model: &LogisticModel, x: &[f64]) -> GroundTruthScores {
    GroundTruthScores::new(
        model.weights.iter().zip(x).map(|(w, v)| w * v).collect(),
        Some(model.bias),
        GtProvenance::MiasLogistic,
    )
}

/// `lambda_m = w_m x_m`, intercept = bias; sums to the prediction.
pub fn mias_linear(model: &LinearModel, x: &[f64]) -> GroundTruthScores {
    GroundTruthScores::new(
        model.weights.iter().zip(x).map(|(w, v)| w * v).collect(),
        Some(model.bias),
        GtProvenance::MiasLinear,
    )
}

/// Per-feature class-conditional log density ratio, intercept = prior
/// log ratio; sums to the log posterior odds.
pub fn mias_gnb(model: &GaussianNbModel, x: &[f64]) -> GroundTruthScores {
    GroundTruthScores::new(
        x.iter()
            .enumerate()
            .map(|(m, &v)| model.feature_log_ratio(m, v))
            .collect(),
        Some(model.prior_log_ratio()),
        GtProvenance::MiasGnb,
    )
}

/// Additive scores for any model with an additive margin.
pub fn mias(model: &FittedModel, x: &[f64]) -> Result<GroundTruthScores> {
    match model {
        FittedModel::Logistic(m) => Ok(mias_logistic(m, x)),
        FittedModel::Linear(m) => Ok(mias_linear(m, x)),
        FittedModel::GaussianNb(m) => Ok(mias_gnb(m, x)),
        FittedModel::Mlp(_) => Err(Error::Unsupported(
            "additive ground truth is only defined for logistic, linear and naive Bayes models".into(),
        )),
    }
}

/// The weight vector, identical for every instance.
pub fn weights_ground_truth(model: &LogisticModel) -> GroundTruthScores {
    GroundTruthScores::new(model.weights.clone(), None, GtProvenance::ModelWeights)
}

/// Stored generator ground truth of dataset row `i`.
pub fn generator_ground_truth(ds: &Dataset, i: usize) -> Result<GroundTruthScores> {
    let row = ds
        .ground_truth_row(i)
        .ok_or_else(|| Error::validation("dataset has no generator ground truth"))?;
    Ok(GroundTruthScores::new(row.to_vec(), None, GtProvenance::Generator))
}

/// Boundary search settings for [`seneca_ground_truth`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySearch {
    pub bisection_steps: usize,
    /// Accept a point when `|p - 0.5| <= tolerance`.
    pub tolerance: f64,
    /// Maximum tangent-plane projections after bisection (0 disables).
    pub max_refinements: usize,
}

impl Default for BoundarySearch {
    fn default() -> Self {
        BoundarySearch {
            bisection_steps: 60,
            tolerance: 1e-6,
            max_refinements: 100,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Newton steps along the margin gradient until the point sits on the
/// boundary. `None` if the model has no gradient or it vanishes.
fn newton_onto_boundary(model: &dyn Model, mut y: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    for _ in 0..50 {
        if (model.predict_proba(&y) - 0.5).abs() <= tol {
            return Some(y);
        }
        let g = model.margin_gradient(&y)?;
        let gg = norm_sq(&g);
        if gg == 0.0 || !gg.is_finite() {
            return None;
        }
        let step = model.predict_margin(&y) / gg;
        for (v, d) in y.iter_mut().zip(&g) {
            *v -= step * d;
        }
    }
    ((model.predict_proba(&y) - 0.5).abs() <= tol).then_some(y)
}

/// Closest point to `x` with `predict_proba = 0.5`.
///
/// Brackets the boundary between `x` and the nearest candidate row whose
/// predicted class differs, bisects that segment, then (for differentiable
/// models) repeatedly projects `x` onto the boundary's tangent plane and
/// steps back onto the boundary while that brings the point closer. For a
/// linear margin the result is the orthogonal projection of `x` onto the
/// hyperplane.
pub fn closest_boundary_point(
    model: &dyn Model,
    x: &[f64],
    candidates: &Dataset,
    search: &BoundarySearch,
) -> Result<Vec<f64>> {
    let p_x = model.predict_proba(x);
    if (p_x - 0.5).abs() <= search.tolerance {
        return Ok(x.to_vec());
    }
    let class_x = p_x >= 0.5;
    let opposite = (0..candidates.n_instances())
        .map(|i| candidates.row(i))
        .filter(|z| (model.predict_proba(z) >= 0.5) != class_x)
        .min_by(|a, b| dist(x, a).total_cmp(&dist(x, b)))
        .ok_or_else(|| Error::NoBoundary("every candidate is predicted in the same class as the instance".into()))?;

    let mut lo = x.to_vec();
    let mut hi = opposite.to_vec();
    for _ in 0..search.bisection_steps {
        let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        if (model.predict_proba(&mid) >= 0.5) == class_x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gap = |z: &[f64]| (model.predict_proba(z) - 0.5).abs();
    let mut best = if gap(&lo) <= gap(&hi) { lo } else { hi };
    if gap(&best) > search.tolerance {
        return Err(Error::NoBoundary(format!(
            "bisection ended {} away from p = 0.5",
            gap(&best)
        )));
    }

    let mut best_d = dist(x, &best);
    for _ in 0..search.max_refinements {
        let Some(g) = model.margin_gradient(&best) else { break };
        let gg = norm_sq(&g);
        if gg == 0.0 {
            break;
        }
        let along: f64 = x.iter().zip(&best).zip(&g).map(|((a, b), d)| (a - b) * d).sum::<f64>() / gg;
        let tangent: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a - along * d).collect();
        let Some(y) = newton_onto_boundary(model, tangent, search.tolerance) else { break };
        let d = dist(x, &y);
        if d < best_d - 1e-15 * best_d.max(1.0) {
            best = y;
            best_d = d;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Gradient of the generating polynomial at the boundary point closest
/// to `x`.
pub fn seneca_ground_truth(
    model: &dyn Model,
    spec: &PolynomialSpec,
    x: &[f64],
    candidates: &Dataset,
    search: &BoundarySearch,
) -> Result<GroundTruthScores> {
    if spec.n_features() > x.len() {
        return Err(Error::validation("polynomial reads more features than the instance has"));
    }
    let boundary = closest_boundary_point(model, x, candidates, search)?;
    let grad = spec.gradient(&boundary);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric("polynomial gradient is not finite at the boundary point"));
    }
    Ok(GroundTruthScores::new(grad, None, GtProvenance::SenecaRc))
}

/// CSV with columns `instance,lambda_0,lambda_1..lambda_M,provenance`;
/// `lambda_0` is the intercept, empty when there is none.
pub fn write_ground_truth_csv<W: Write>(rows: &[(usize, GroundTruthScores)], out: W) -> Result<()> {
    let m = rows.first().map_or(0, |(_, g)| g.values.len());
    if rows.iter().any(|(_, g)| g.values.len() != m) {
        return Err(Error::validation("ground-truth rows have different lengths"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance".to_owned(), "lambda_0".to_owned()];
    header.extend((1..=m).map(|j| format!("lambda_{j}")));
    header.push("provenance".into());
    w.write_record(&header)?;
    for (i, g) in rows {
        let mut rec = vec![i.to_string(), g.intercept.map(|b| format!("{b:?}")).unwrap_or_default()];
        rec.extend(g.values.iter().map(|v| format!("{v:?}")));
        rec.push(g.provenance.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, GroundTruthScores)>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::from(e).at_path(path))?;
    let mut out = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let bad = |message: String| Error::Parse { row, message };
        if rec.len() < 4 {
            return Err(bad("expected instance, lambda_0, at least one value and provenance".into()));
        }
        let instance = rec[0].trim().parse().map_err(|_| bad(format!("bad instance `{}`", &rec[0])))?;
        let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        let intercept = if rec[1].trim().is_empty() { None } else { Some(number(&rec[1])?) };
        let last = rec.len() - 1;
        let values = (2..last).map(|j| number(&rec[j])).collect::<Result<Vec<_>>>()?;
        let provenance = rec[last].trim().parse().map_err(|e: Error| bad(e.to_string()))?;
        out.push((instance, GroundTruthScores::new(values, intercept, provenance)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use crate::models::sigmoid;
    use ndarray::{array, Array2};

    #[test]
    fn logistic_mias_worked_example() {
        let m = LogisticModel::new(vec![2.0, -1.0], 0.0);
        let gt = mias_logistic(&m, &[1.0, 1.0]);
        assert_eq!(gt.values, vec![2.0, -1.0]);
        assert_eq!(gt.total(), 1.0);
        let p = m.predict_proba(&[1.0, 1.0]);
        assert!((gt.total() - (p / (1.0 - p)).ln()).abs() < 1e-10);
        let zero = mias_logistic(&LogisticModel::new(vec![2.0, -1.0], 0.4), &[0.0, 0.0]);
        assert_eq!(zero.values, vec![0.0, 0.0]);
        assert_eq!(zero.total(), 0.4);
    }

    #[test]
    fn linear_mias() {
        let m = LinearModel::new(vec![3.0], 0.0);
        assert_eq!(mias_linear(&m, &[2.0]).values, vec![6.0]);
        assert_eq!(mias_linear(&m, &[0.0]).values, vec![0.0]);
    }

    #[test]
    fn gnb_symmetric_classes_give_zero() {
        let m = GaussianNbModel {
            priors: [0.5, 0.5],
            means: [vec![1.0, -2.0], vec![1.0, -2.0]],
            variances: [vec![0.5, 2.0], vec![0.5, 2.0]],
            var_floor: 1e-9,
        };
        assert_eq!(mias_gnb(&m, &[3.0, 0.1]).values, vec![0.0, 0.0]);
    }

    #[test]
    fn gnb_variance_only_feature_matters_far_out() {
        let m = GaussianNbModel {
            priors: [0.5, 0.5],
            means: [vec![0.0], vec![0.0]],
            variances: [vec![1.0], vec![4.0]],
            var_floor: 1e-9,
        };
        // log N(x;0,4) - log N(x;0,1) = -ln 2 + 3x^2/8
        let x = 5.0;
        let expected = -(2.0f64).ln() + 3.0 * x * x / 8.0;
        let lambda = mias_gnb(&m, &[x]).values[0];
        assert!((lambda - expected).abs() < 1e-12);
        assert!(lambda > 0.0);
    }

    #[test]
    fn mlp_has_no_mias() {
        let m = FittedModel::Mlp(crate::models::MlpModel::init(2, &[3], crate::RunSeed(0)));
        assert!(matches!(mias(&m, &[0.0, 0.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn weights_gt_is_instance_independent() {
        let m = LogisticModel::new(vec![0.3, -2.0], 1.0);
        assert_eq!(weights_ground_truth(&m).values, m.weights);
    }

    fn grid(points: Vec<f64>, m: usize) -> Dataset {
        let n = points.len() / m;
        Dataset::new(
            Array2::from_shape_vec((n, m), points).unwrap(),
            vec![0; n],
            Dataset::default_names(m),
            None,
            Provenance::new("test", serde_json::Value::Null, None),
        )
        .unwrap()
    }

    #[test]
    fn boundary_point_is_hyperplane_projection() {
        let model = LogisticModel::new(vec![1.5, -0.5, 0.8], 0.3);
        let cands = grid(vec![3.0, 0.0, 1.0, -3.0, 1.0, -2.0, -1.0, 2.0, -0.5, 2.5, -1.0, 0.2], 3);
        let x = [1.0, -0.4, 0.9];
        let star = closest_boundary_point(&model, &x, &cands, &BoundarySearch::default()).unwrap();
        let w = &model.weights;
        let t = model.log_odds(&x) / norm_sq(w);
        for j in 0..3 {
            assert!((star[j] - (x[j] - t * w[j])).abs() <= 1e-6);
        }
        assert!((sigmoid(model.log_odds(&star)) - 0.5).abs() <= 1e-6);
    }

    #[test]
    fn no_boundary_when_all_candidates_agree() {
        let model = LogisticModel::new(vec![1.0], 0.0);
        let cands = grid(vec![1.0, 2.0, 3.0], 1);
        let spec = PolynomialSpec::linear(&[1.0]);
        assert!(matches!(
            seneca_ground_truth(&model, &spec, &[0.5], &cands, &BoundarySearch::default()),
            Err(Error::NoBoundary(_))
        ));
    }

    #[test]
    fn linear_spec_gradient_is_constant() {
        let model = LogisticModel::new(vec![4.0, -2.5], 0.1);
        let cands = grid(vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0], 2);
        let spec = PolynomialSpec::linear(&[2.0, -1.0]);
        for x in [[0.4, 0.1], [-1.2, 0.3], [2.0, 2.0]] {
            let gt = seneca_ground_truth(&model, &spec, &x, &cands, &BoundarySearch::default()).unwrap();
            assert_eq!(gt.values, vec![2.0, -1.0]);
            assert_eq!(gt.normalized_linf().values, vec![1.0, -0.5]);
        }
    }

    #[test]
    fn provenance_strings() {
        for p in [GtProvenance::MiasLogistic, GtProvenance::SenecaRc, GtProvenance::ModelWeights] {
            assert_eq!(p.to_string().parse::<GtProvenance>().unwrap(), p);
        }
        let _ = array![[0.0]];
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            (0, GroundTruthScores::new(vec![0.3, -0.1], Some(1.5), GtProvenance::MiasLogistic)),
            (4, GroundTruthScores::new(vec![2.0, -1.0], None, GtProvenance::SenecaRc)),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        write_ground_truth_csv(&rows, std::fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(read_ground_truth_csv(&path).unwrap(), rows);
    }
}
