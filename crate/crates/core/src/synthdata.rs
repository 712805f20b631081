//! Synthetic datasets that ship with a per-instance prior ground truth.
//!
//! Four classic 10-dimensional generators draw `X` from a standard Gaussian
//! (the switch generator mixes its first coordinate) and set
//! `P(Y=1|X) = sigmoid(s(X))` for a generator-specific score `s`; their
//! ground truth is the binary mask of features entering `s`. The polynomial
//! generator thresholds a user-supplied function plus Gaussian noise and
//! stores its analytic gradient; the cluster generator samples axis-aligned
//! Gaussian clusters with per-cluster feature masks.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::seed::{RunSeed, StreamRng};

pub const CHEN_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Sin,
    Cos,
    Abs,
    Square,
    Exp,
    /// `exp(-t)`
    NegExp,
}

impl Transform {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Transform::Identity => t,
            Transform::Sin => t.sin(),
            Transform::Cos => t.cos(),
            Transform::Abs => t.abs(),
            Transform::Square => t * t,
            Transform::Exp => t.exp(),
            Transform::NegExp => (-t).exp(),
        }
    }

    /// Derivative at `t`; `abs` uses 0 at the kink.
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Sin => t.cos(),
            Transform::Cos => -t.sin(),
            Transform::Abs => {
                if t > 0.0 {
                    1.0
                } else if t < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Transform::Square => 2.0 * t,
            Transform::Exp => t.exp(),
            Transform::NegExp => -(-t).exp(),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// `coefficient * transform(scale * x[feature])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialTerm {
    pub coefficient: f64,
    pub feature: usize,
    pub transform: Transform,
    #[serde(default = "one")]
    pub scale: f64,
}

impl PolynomialTerm {
    pub fn new(coefficient: f64, feature: usize, transform: Transform) -> Self {
        PolynomialTerm {
            coefficient,
            feature,
            transform,
            scale: 1.0,
        }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

/// Additive generating function `intercept + sum of terms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub terms: Vec<PolynomialTerm>,
    #[serde(default)]
    pub intercept: f64,
}

impl PolynomialSpec {
    /// `sum_j coefficients[j] * x_j`.
    pub fn linear(coefficients: &[f64]) -> PolynomialSpec {
        PolynomialSpec {
            terms: coefficients
                .iter()
                .enumerate()
                .map(|(j, &c)| PolynomialTerm::new(c, j, Transform::Identity))
                .collect(),
            intercept: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::validation("polynomial needs at least one term"));
        }
        let finite = self.intercept.is_finite()
            && self
                .terms
                .iter()
                .all(|t| t.coefficient.is_finite() && t.scale.is_finite());
        if !finite {
            return Err(Error::validation("polynomial coefficients must be finite"));
        }
        Ok(())
    }

    /// Number of input features the function reads (highest index + 1).
    pub fn n_features(&self) -> usize {
        self.terms.iter().map(|t| t.feature + 1).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .terms
                .iter()
                .map(|t| t.coefficient * t.transform.apply(t.scale * x[t.feature]))
                .sum::<f64>()
    }

    /// Analytic gradient, same length as `x`; features not in any term get 0.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for t in &self.terms {
            g[t.feature] += t.coefficient * t.scale * t.transform.derivative(t.scale * x[t.feature]);
        }
        g
    }
}

/// How cluster members get their label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClusterLabels {
    Fixed(Vec<u8>),
    Rule(LabelRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelRule {
    /// Label 1 iff `sum_m mask_m * weight_m * (x_m - center_m) > 0`.
    #[serde(rename = "from-score")]
    FromScore,
}

impl Default for ClusterLabels {
    fn default() -> Self {
        ClusterLabels::Rule(LabelRule::FromScore)
    }
}

/// Axis-aligned Gaussian clusters with per-cluster feature masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub centers: Vec<Vec<f64>>,
    pub scales: Vec<Vec<f64>>,
    pub masks: Vec<Vec<u8>>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default)]
    pub cluster_labels: ClusterLabels,
}

impl ClusterSpec {
    pub fn n_clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn n_features(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_clusters();
        let m = self.n_features();
        if k < 2 {
            return Err(Error::validation(format!("need at least 2 clusters, got {k}")));
        }
        if m == 0 {
            return Err(Error::validation("clusters need at least one feature"));
        }
        if !is_k_by_m(&self.centers, k, m)
            || !is_k_by_m(&self.scales, k, m)
            || !is_k_by_m(&self.masks, k, m)
            || !is_k_by_m(&self.weights, k, m)
        {
            return Err(Error::validation("cluster arrays must all be K x M"));
        }
        if self.masks.iter().flatten().any(|&b| b > 1) {
            return Err(Error::validation("cluster masks must be 0/1"));
        }
        if self.scales.iter().flatten().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::validation("cluster scales must be positive and finite"));
        }
        if self.centers.iter().chain(&self.weights).flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("cluster centers and weights must be finite"));
        }
        if let ClusterLabels::Fixed(labels) = &self.cluster_labels {
            if labels.len() != k || labels.iter().any(|&l| l > 1) {
                return Err(Error::validation("fixed cluster labels must be K values in {0,1}"));
            }
        }
        Ok(())
    }

    /// `k` clusters in `m` dimensions with centers uniform in `[-4, 4]`,
    /// unit scales, random non-empty masks and standard normal weights.
    pub fn random(k: usize, m: usize, seed: RunSeed) -> ClusterSpec {
        let mut rng = seed.derive_stream("synth/cluster_spec", 0);
        let mut centers = Vec::with_capacity(k);
        let mut masks = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for _ in 0..k {
            centers.push((0..m).map(|_| rng.random_range(-4.0..4.0)).collect());
            let mut mask: Vec<u8> = (0..m).map(|_| u8::from(rng.random_bool(0.5))).collect();
            if m > 0 && mask.iter().all(|&b| b == 0) {
                let j = rng.random_range(0..m);
                mask[j] = 1;
            }
            masks.push(mask);
            weights.push((0..m).map(|_| rng.sample(StandardNormal)).collect());
        }
        ClusterSpec {
            centers,
            scales: vec![vec![1.0; m]; k],
            masks,
            weights,
            cluster_labels: ClusterLabels::default(),
        }
    }
}

fn is_k_by_m<T>(rows: &[Vec<T>], k: usize, m: usize) -> bool {
    rows.len() == k && rows.iter().all(|r| r.len() == m)
}

fn standard_normals(rng: &mut StreamRng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.sample(StandardNormal)).collect()
}

fn draw_label(score: f64, rng: &mut StreamRng) -> u8 {
    u8::from(rng.random::<f64>() < sigmoid(score))
}

/// Row `i` is produced from its own stream, so generation is parallel and
/// independent of thread scheduling.
fn build_rows<F>(n: usize, m: usize, seed: RunSeed, tag: &str, row: F) -> Result<(Array2<f64>, Vec<u8>, Array2<f64>)>
where
    F: Fn(&mut StreamRng) -> Result<(Vec<f64>, u8, Vec<f64>)> + Sync,
{
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    let rows: Vec<(Vec<f64>, u8, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| row(&mut seed.derive_stream(tag, i as u64)))
        .collect::<Result<_>>()?;
    let mut x = Vec::with_capacity(n * m);
    let mut gt = Vec::with_capacity(n * m);
    let mut y = Vec::with_capacity(n);
    for (xi, yi, gi) in rows {
        x.extend(xi);
        y.push(yi);
        gt.extend(gi);
    }
    Ok((
        Array2::from_shape_vec((n, m), x).expect("row-major fill"),
        y,
        Array2::from_shape_vec((n, m), gt).expect("row-major fill"),
    ))
}

fn mask(m: usize, on: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for &j in on {
        v[j] = 1.0;
    }
    v
}

pub fn xor_score(x: &[f64]) -> f64 {
    x[0] * x[1]
}

/// `sum_{i<4} x_i^2 - 4` over the first four entries of `x`.
pub fn orange_skin_score(x: &[f64]) -> f64 {
    x[..4].iter().map(|v| v * v).sum::<f64>() - 4.0
}

/// `-100 sin(2 x_0) + 2|x_1| + x_2 + exp(-x_3)`.
pub fn nonlinear_additive_score(x: &[f64]) -> f64 {
    -100.0 * (2.0 * x[0]).sin() + 2.0 * x[1].abs() + x[2] + (-x[3]).exp()
}

fn chen_dataset(
    name: &str,
    n: usize,
    seed: RunSeed,
    score: fn(&[f64]) -> f64,
    important: &[usize],
) -> Result<Dataset> {
    let gt_row = mask(CHEN_DIM, important);
    let (x, y, gt) = build_rows(n, CHEN_DIM, seed, &format!("synth/{name}"), |rng| {
        let x = standard_normals(rng, CHEN_DIM);
        let label = draw_label(score(&x), rng);
        Ok((x, label, gt_row.clone()))
    })?;
    Dataset::new(
        x,
        y,
        Dataset::default_names(CHEN_DIM),
        Some(gt),
        Provenance::new(name, serde_json::json!({ "n": n, "label_law": "sigmoid(score)" }), Some(seed.master())),
    )
}

/// `P(Y=1|X) = sigmoid(X_0 X_1)`; features 0 and 1 are important.
pub fn generate_xor(n: usize, seed: RunSeed) -> Result<Dataset> {
    chen_dataset("xor", n, seed, xor_score, &[0, 1])
}

/// `P(Y=1|X) = sigmoid(sum_{i<4} X_i^2 - 4)`; features 0..4 are important.
pub fn generate_orange_skin(n: usize, seed: RunSeed) -> Result<Dataset> {
    chen_dataset("orange_skin", n, seed, orange_skin_score, &[0, 1, 2, 3])
}

/// `P(Y=1|X) = sigmoid(-100 sin(2X_0) + 2|X_1| + X_2 + exp(-X_3))`.
pub fn generate_nonlinear_additive(n: usize, seed: RunSeed) -> Result<Dataset> {
    chen_dataset("nonlinear_additive", n, seed, nonlinear_additive_score, &[0, 1, 2, 3])
}

/// Switch generator with the switch coordinate marked important.
pub fn generate_switch(n: usize, seed: RunSeed) -> Result<Dataset> {
    generate_switch_with(n, seed, true)
}

/// `X_0` comes from `N(+3,1)` or `N(-3,1)` with equal probability. The
/// `+3` component labels with the orange-skin score on features 1..=4,
/// the `-3` component with the nonlinear-additive score on features 5..=8.
/// With `mark_switch`, feature 0 is part of both ground-truth masks.
pub fn generate_switch_with(n: usize, seed: RunSeed, mark_switch: bool) -> Result<Dataset> {
    let switch: &[usize] = if mark_switch { &[0] } else { &[] };
    let upper: Vec<usize> = switch.iter().copied().chain(1..=4).collect();
    let lower: Vec<usize> = switch.iter().copied().chain(5..=8).collect();
    let (upper_gt, lower_gt) = (mask(CHEN_DIM, &upper), mask(CHEN_DIM, &lower));
    let (x, y, gt) = build_rows(n, CHEN_DIM, seed, "synth/switch", |rng| {
        let positive = rng.random_bool(0.5);
        let mut x = standard_normals(rng, CHEN_DIM);
        x[0] += if positive { 3.0 } else { -3.0 };
        let (score, gt) = if positive {
            (orange_skin_score(&x[1..5]), upper_gt.clone())
        } else {
            (nonlinear_additive_score(&x[5..9]), lower_gt.clone())
        };
        Ok((x, draw_label(score, rng), gt))
    })?;
    Dataset::new(
        x,
        y,
        Dataset::default_names(CHEN_DIM),
        Some(gt),
        Provenance::new(
            "switch",
            serde_json::json!({ "n": n, "mark_switch": mark_switch, "label_law": "sigmoid(score)" }),
            Some(seed.master()),
        ),
    )
}

/// Polynomial-threshold data: `X ~ N(0, I)` over the polynomial's features
/// plus `n_redundant` extra ones, label 1 iff `spec(x) + noise * eps > 0`.
/// Ground truth is the analytic gradient of `spec` at each instance (zero
/// on redundant features); the model-dependent boundary refinement lives
/// in [`crate::groundtruth::seneca_ground_truth`].
pub fn generate_seneca_rc(
    spec: &PolynomialSpec,
    n: usize,
    noise: f64,
    n_redundant: usize,
    seed: RunSeed,
) -> Result<Dataset> {
    spec.validate()?;
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::validation("noise must be a finite non-negative number"));
    }
    let m = spec.n_features() + n_redundant;
    let (x, y, gt) = build_rows(n, m, seed, "synth/seneca_rc", |rng| {
        let x = standard_normals(rng, m);
        let eps: f64 = rng.sample(StandardNormal);
        let value = spec.evaluate(&x);
        let grad = spec.gradient(&x);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric("polynomial evaluates to a non-finite value"));
        }
        Ok((x, u8::from(value + noise * eps > 0.0), grad))
    })?;
    Dataset::new(
        x,
        y,
        Dataset::default_names(m),
        Some(gt),
        Provenance::new(
            "seneca_rc",
            serde_json::json!({ "n": n, "noise": noise, "n_redundant": n_redundant, "polynomial": spec }),
            Some(seed.master()),
        ),
    )
}

/// Uniformly chosen cluster per instance; ground truth is the cluster mask.
pub fn generate_gaussian_clusters(spec: &ClusterSpec, n: usize, seed: RunSeed) -> Result<Dataset> {
    spec.validate()?;
    let m = spec.n_features();
    let k = spec.n_clusters();
    let (x, y, gt) = build_rows(n, m, seed, "synth/gaussian_clusters", |rng| {
        let c = rng.random_range(0..k);
        let x: Vec<f64> = (0..m)
            .map(|j| spec.centers[c][j] + spec.scales[c][j] * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let label = match &spec.cluster_labels {
            ClusterLabels::Fixed(labels) => labels[c],
            ClusterLabels::Rule(LabelRule::FromScore) => {
                let s: f64 = (0..m)
                    .map(|j| f64::from(spec.masks[c][j]) * spec.weights[c][j] * (x[j] - spec.centers[c][j]))
                    .sum();
                u8::from(s > 0.0)
            }
        };
        Ok((x, label, spec.masks[c].iter().map(|&b| f64::from(b)).collect()))
    })?;
    let label_rule = match spec.cluster_labels {
        ClusterLabels::Fixed(_) => "fixed-per-cluster",
        ClusterLabels::Rule(LabelRule::FromScore) => "masked-linear-score",
    };
    Dataset::new(
        x,
        y,
        Dataset::default_names(m),
        Some(gt),
        Provenance::new(
            "gaussian_clusters",
            serde_json::json!({ "n": n, "clusters": spec, "label_rule": label_rule }),
            Some(seed.master()),
        ),
    )
}

/// Declarative generator choice, as used by config files and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Xor {
        n: usize,
    },
    OrangeSkin {
        n: usize,
    },
    NonlinearAdditive {
        n: usize,
    },
    Switch {
        n: usize,
        #[serde(default = "default_true")]
        mark_switch: bool,
    },
    SenecaRc {
        n: usize,
        polynomial: PolynomialSpec,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        n_redundant: usize,
    },
    GaussianClusters {
        n: usize,
        clusters: ClusterSpec,
    },
}

fn default_true() -> bool {
    true
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Xor { .. } => "xor",
            GeneratorSpec::OrangeSkin { .. } => "orange_skin",
            GeneratorSpec::NonlinearAdditive { .. } => "nonlinear_additive",
            GeneratorSpec::Switch { .. } => "switch",
            GeneratorSpec::SenecaRc { .. } => "seneca_rc",
            GeneratorSpec::GaussianClusters { .. } => "gaussian_clusters",
        }
    }

    pub fn generate(&self, seed: RunSeed) -> Result<Dataset> {
        match self {
            GeneratorSpec::Xor { n } => generate_xor(*n, seed),
            GeneratorSpec::OrangeSkin { n } => generate_orange_skin(*n, seed),
            GeneratorSpec::NonlinearAdditive { n } => generate_nonlinear_additive(*n, seed),
            GeneratorSpec::Switch { n, mark_switch } => generate_switch_with(*n, seed, *mark_switch),
            GeneratorSpec::SenecaRc {
                n,
                polynomial,
                noise,
                n_redundant,
            } => generate_seneca_rc(polynomial, *n, *noise, *n_redundant, seed),
            GeneratorSpec::GaussianClusters { n, clusters } => generate_gaussian_clusters(clusters, *n, seed),
        }
    }

    /// The polynomial behind a Seneca-RC dataset, if any.
    pub fn polynomial(&self) -> Option<&PolynomialSpec> {
        match self {
            GeneratorSpec::SenecaRc { polynomial, .. } => Some(polynomial),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn distinct_gt_rows(ds: &Dataset) -> HashSet<Vec<u64>> {
        (0..ds.n_instances())
            .map(|i| ds.ground_truth_row(i).unwrap().iter().map(|v| v.to_bits()).collect())
            .collect()
    }

    #[test]
    fn xor_marginal_and_mask() {
        let ds = generate_xor(1000, RunSeed(42)).unwrap();
        assert_eq!(ds.n_features(), 10);
        let rate = ds.class_counts()[1] as f64 / 1000.0;
        assert!((0.4..=0.6).contains(&rate), "P(Y=1) = {rate}");
        for i in 0..ds.n_instances() {
            assert_eq!(ds.ground_truth_row(i).unwrap(), &[1., 1., 0., 0., 0., 0., 0., 0., 0., 0.]);
        }
    }

    #[test]
    fn zero_rows_rejected() {
        assert!(matches!(generate_xor(0, RunSeed(1)), Err(Error::Validation(_))));
    }

    #[test]
    fn orange_skin_gt_constant_and_excludes_feature_five() {
        let ds = generate_orange_skin(300, RunSeed(3)).unwrap();
        assert_eq!(distinct_gt_rows(&ds).len(), 1);
        assert_eq!(ds.ground_truth_row(0).unwrap()[4], 0.0);
        assert_eq!(ds.ground_truth_row(0).unwrap()[..4], [1.0; 4]);
        let single = generate_orange_skin(1, RunSeed(3)).unwrap();
        assert_eq!((single.n_instances(), single.n_features()), (1, 10));
    }

    #[test]
    fn nonlinear_additive_is_deterministic() {
        let a = generate_nonlinear_additive(200, RunSeed(5)).unwrap();
        let b = generate_nonlinear_additive(200, RunSeed(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(distinct_gt_rows(&a).len(), 1);
        assert_eq!(a.ground_truth_row(0).unwrap()[..5], [1.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn nonlinear_score_matches_formula() {
        let x = [0.3, -1.2, 0.7, 0.4];
        let expected = -100.0 * (0.6f64).sin() + 2.4 + 0.7 + (-0.4f64).exp();
        assert!((nonlinear_additive_score(&x) - expected).abs() < 1e-12);
    }

    #[test]
    fn switch_masks_follow_component() {
        let ds = generate_switch(500, RunSeed(8)).unwrap();
        assert_eq!(distinct_gt_rows(&ds).len(), 2);
        for i in 0..ds.n_instances() {
            let gt = ds.ground_truth_row(i).unwrap();
            if gt[1] == 1.0 {
                assert_eq!(gt, &[1., 1., 1., 1., 1., 0., 0., 0., 0., 0.]);
            } else {
                assert_eq!(gt, &[1., 0., 0., 0., 0., 1., 1., 1., 1., 0.]);
            }
        }
        let upper = (0..500).filter(|&i| ds.ground_truth_row(i).unwrap()[1] == 1.0);
        let mean_x0 = upper.clone().map(|i| ds.row(i)[0]).sum::<f64>() / upper.count() as f64;
        assert!((mean_x0 - 3.0).abs() < 0.2);
    }

    #[test]
    fn strict_switch_masks() {
        let ds = generate_switch_with(100, RunSeed(8), false).unwrap();
        for i in 0..ds.n_instances() {
            let gt = ds.ground_truth_row(i).unwrap();
            assert_eq!(gt[0], 0.0);
            assert_eq!(gt.iter().sum::<f64>(), 4.0);
        }
    }

    #[test]
    fn polynomial_gradients() {
        let spec = PolynomialSpec::linear(&[2.0, -1.0]);
        assert_eq!(spec.gradient(&[0.3, 9.0]), vec![2.0, -1.0]);
        let sin = PolynomialSpec {
            terms: vec![PolynomialTerm::new(-100.0, 0, Transform::Sin).scaled(2.0)],
            intercept: 0.0,
        };
        assert_eq!(sin.gradient(&[0.0]), vec![-200.0]);
    }

    #[test]
    fn seneca_linear_dataset() {
        let spec = PolynomialSpec::linear(&[2.0, -1.0]);
        let ds = generate_seneca_rc(&spec, 1000, 0.3, 0, RunSeed(0)).unwrap();
        assert_eq!(ds.n_features(), 2);
        for i in 0..ds.n_instances() {
            assert_eq!(ds.ground_truth_row(i).unwrap(), &[2.0, -1.0]);
        }
        let with_redundant = generate_seneca_rc(&spec, 10, 0.3, 3, RunSeed(0)).unwrap();
        assert_eq!(with_redundant.ground_truth_row(0).unwrap(), &[2.0, -1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn seneca_rejects_overflow() {
        let spec = PolynomialSpec {
            terms: vec![PolynomialTerm::new(1.0, 0, Transform::Exp).scaled(1e6)],
            intercept: 0.0,
        };
        assert!(matches!(
            generate_seneca_rc(&spec, 50, 0.0, 0, RunSeed(1)),
            Err(Error::Numeric(_))
        ));
    }

    fn four_corners() -> ClusterSpec {
        ClusterSpec {
            centers: vec![vec![-3.0, 3.0], vec![3.0, 3.0], vec![-3.0, -3.0], vec![3.0, -3.0]],
            scales: vec![vec![0.8, 0.8]; 4],
            masks: vec![vec![0, 1], vec![1, 1], vec![1, 0], vec![1, 1]],
            weights: vec![vec![1.0, -1.0]; 4],
            cluster_labels: ClusterLabels::default(),
        }
    }

    #[test]
    fn clusters_share_gt_per_cluster() {
        let spec = four_corners();
        let ds = generate_gaussian_clusters(&spec, 400, RunSeed(2)).unwrap();
        assert!(distinct_gt_rows(&ds).len() <= 4);
        for i in 0..ds.n_instances() {
            let x = ds.row(i);
            let gt = ds.ground_truth_row(i).unwrap();
            if x[0] < -1.5 && x[1] > 1.5 {
                assert_eq!(gt, &[0.0, 1.0]);
            }
        }
    }

    #[test]
    fn single_cluster_is_invalid() {
        let mut spec = four_corners();
        spec.centers.truncate(1);
        spec.scales.truncate(1);
        spec.masks.truncate(1);
        spec.weights.truncate(1);
        assert!(matches!(
            generate_gaussian_clusters(&spec, 10, RunSeed(0)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn cluster_spec_json_forms() {
        let json = r#"{"centers":[[0,0],[1,1]],"scales":[[1,1],[1,1]],"masks":[[1,0],[0,1]],
                       "weights":[[1,1],[1,1]],"cluster_labels":"from-score"}"#;
        let spec: ClusterSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.cluster_labels, ClusterLabels::Rule(LabelRule::FromScore));
        let json = json.replace("\"from-score\"", "[0,1]");
        let spec: ClusterSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec.cluster_labels, ClusterLabels::Fixed(vec![0, 1]));
    }

    #[test]
    fn random_cluster_spec_is_valid() {
        let spec = ClusterSpec::random(5, 4, RunSeed(12));
        spec.validate().unwrap();
        assert!(spec.masks.iter().all(|m| m.contains(&1)));
    }
}
