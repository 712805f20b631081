//! Agreement between an attribution and a reference importance vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::attribution::{rank_by_magnitude, Attribution};
use crate::error::{Error, Result};
use crate::groundtruth::GroundTruthScores;
use crate::harness::report::{InstanceKey, ReportRow};

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::validation(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::validation("metric inputs must be finite"));
    }
    Ok(())
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// `1 / (machine_epsilon + |a - b|_2)`.
pub fn euclidean_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 / (f64::EPSILON + euclidean_distance(a, b)?))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedInput("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        // positions start..end hold equal values; ranks start+1..=end
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::UndefinedInput("Spearman correlation needs at least two entries".into()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
        .ok_or_else(|| Error::UndefinedInput("Spearman correlation with constant ranks".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopKMode {
    /// F1 between the top-k index sets by magnitude.
    F1,
    /// As `F1`, counting an overlap only when the signs agree.
    Signed,
}

/// Agreement of the top-`k` features by absolute score. Both sets have
/// size `k`, so precision, recall and F1 coincide at `|A ∩ B| / k`.
pub fn topk_agreement(a: &[f64], b: &[f64], k: usize, mode: TopKMode) -> Result<f64> {
    check_lengths(a, b)?;
    if k == 0 || k > a.len() {
        return Err(Error::validation(format!("k = {k} outside 1..={}", a.len())));
    }
    let top_a = &rank_by_magnitude(a)[..k];
    let top_b = &rank_by_magnitude(b)[..k];
    let hits = top_a
        .iter()
        .filter(|i| top_b.contains(i))
        .filter(|&&i| match mode {
            TopKMode::F1 => true,
            TopKMode::Signed => a[i].signum() == b[i].signum(),
        })
        .count();
    Ok(hits as f64 / k as f64)
}

/// A configured similarity measure. String form: `euclidean_similarity`,
/// `cosine`, `spearman`, `topk_f1:<k>`, `topk_signed:<k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    EuclideanSimilarity,
    Cosine,
    Spearman,
    TopK { k: usize, mode: TopKMode },
}

impl Metric {
    pub fn compute(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match *self {
            Metric::EuclideanSimilarity => euclidean_similarity(a, b),
            Metric::Cosine => cosine_similarity(a, b),
            Metric::Spearman => spearman_correlation(a, b),
            Metric::TopK { k, mode } => topk_agreement(a, b, k, mode),
        }
    }

    /// Every implemented metric that is defined for vectors of length `m`.
    pub fn all_for_dimension(m: usize) -> Vec<Metric> {
        let mut out = vec![Metric::EuclideanSimilarity, Metric::Cosine, Metric::Spearman];
        for k in 1..=m {
            out.push(Metric::TopK { k, mode: TopKMode::F1 });
            out.push(Metric::TopK { k, mode: TopKMode::Signed });
        }
        out
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::EuclideanSimilarity => f.write_str("euclidean_similarity"),
            Metric::Cosine => f.write_str("cosine"),
            Metric::Spearman => f.write_str("spearman"),
            Metric::TopK { k, mode: TopKMode::F1 } => write!(f, "topk_f1:{k}"),
            Metric::TopK { k, mode: TopKMode::Signed } => write!(f, "topk_signed:{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_k = |k: &str| {
            k.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad k in metric `{s}`")))
        };
        match s.split_once(':') {
            None => match s {
                "euclidean_similarity" => Ok(Metric::EuclideanSimilarity),
                "cosine" => Ok(Metric::Cosine),
                "spearman" => Ok(Metric::Spearman),
                _ => Err(Error::Config(format!("unknown metric `{s}`"))),
            },
            Some(("topk_f1", k)) => Ok(Metric::TopK {
                k: parse_k(k)?,
                mode: TopKMode::F1,
            }),
            Some(("topk_signed", k)) => Ok(Metric::TopK {
                k: parse_k(k)?,
                mode: TopKMode::Signed,
            }),
            _ => Err(Error::Config(format!("unknown metric `{s}`"))),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rows of a ground-truth evaluation: one per (instance, metric), followed
/// by `mean` and `median` aggregate rows per metric. Undefined metric
/// values (e.g. Spearman on a constant vector) are reported as NaN with a
/// flag and skipped by the aggregates.
pub fn evaluate_against_gt(
    attributions: &[(usize, Attribution)],
    gts: &[(usize, GroundTruthScores)],
    metrics: &[Metric],
) -> Result<Vec<ReportRow>> {
    if metrics.is_empty() {
        return Err(Error::validation("no metrics requested"));
    }
    if attributions.len() != gts.len() {
        return Err(Error::validation(format!(
            "{} attributions vs {} ground-truth rows",
            attributions.len(),
            gts.len()
        )));
    }
    if let Some(((ia, _), (ig, _))) = attributions.iter().zip(gts).find(|((a, _), (g, _))| a != g) {
        return Err(Error::validation(format!("misaligned instances: attribution {ia} vs ground truth {ig}")));
    }
    let mut rows = Vec::new();
    for metric in metrics {
        let mut values = Vec::with_capacity(attributions.len());
        for ((instance, attr), (_, gt)) in attributions.iter().zip(gts) {
            let measure = format!("gt:{}/{}", gt.provenance, metric);
            let (value, flags) = match metric.compute(&attr.scores, &gt.values) {
                Ok(v) => {
                    values.push(v);
                    (v, String::new())
                }
                Err(e @ Error::UndefinedInput(_)) => (f64::NAN, format!("undefined: {e}")),
                Err(e) => return Err(e),
            };
            rows.push(ReportRow::new(
                "",
                "",
                &attr.explainer_id,
                InstanceKey::Index(*instance),
                measure,
                value,
                flags,
            ));
        }
        let provenance = gts.first().map(|(_, g)| g.provenance.to_string()).unwrap_or_default();
        let explainer = attributions.first().map(|(_, a)| a.explainer_id.clone()).unwrap_or_default();
        let measure = format!("gt:{provenance}/{metric}");
        rows.push(ReportRow::new(
            "",
            "",
            &explainer,
            InstanceKey::Mean,
            measure.clone(),
            mean(&values),
            String::new(),
        ));
        rows.push(ReportRow::new(
            "",
            "",
            &explainer,
            InstanceKey::Median,
            measure,
            median(&values),
            String::new(),
        ));
    }
    Ok(rows)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: [f64; 3] = [0.32, 0.2, 0.42];
    const PHI1: [f64; 3] = [0.21, 0.1, 0.32];
    const PHI2: [f64; 3] = [0.21, 0.3, 0.12];

    #[test]
    fn worked_example_values() {
        assert_eq!(spearman_correlation(&LAMBDA, &PHI1).unwrap(), 1.0);
        assert_eq!(spearman_correlation(&LAMBDA, &PHI2).unwrap(), -1.0);
        assert!((cosine_similarity(&LAMBDA, &PHI1).unwrap() - 0.99).abs() <= 0.005);
        // 0.81624..., printed to two decimals as 0.81
        let c2 = cosine_similarity(&LAMBDA, &PHI2).unwrap();
        assert!((c2 - 0.8162).abs() <= 1e-4);
        assert_eq!((c2 * 100.0).trunc() / 100.0, 0.81);
        assert!((euclidean_distance(&LAMBDA, &PHI1).unwrap() - 0.1792).abs() <= 1e-4);
        assert!((euclidean_distance(&LAMBDA, &PHI2).unwrap() - 0.3348).abs() <= 1e-4);
    }

    #[test]
    fn euclidean_similarity_values() {
        assert_eq!(euclidean_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0 / f64::EPSILON);
        let s = euclidean_similarity(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((s - 0.2).abs() < 1e-12);
        assert!(euclidean_similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cosine_edge_cases() {
        let v = [1.0, -2.0, 0.5];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine_similarity(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(cosine_similarity(&v, &[0.0; 3]), Err(Error::UndefinedInput(_))));
    }

    #[test]
    fn spearman_ties_and_monotone_transform() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let v = [0.3, -1.0, 2.5, 0.0, 7.0];
        let t: Vec<f64> = v.iter().map(|x: &f64| x.exp() * 3.0).collect();
        assert!((spearman_correlation(&v, &t).unwrap() - 1.0).abs() < 1e-12);
        assert!(spearman_correlation(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(spearman_correlation(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn topk_cases() {
        let v = [0.5, -0.1, 0.9];
        for k in 1..=3 {
            assert_eq!(topk_agreement(&v, &v, k, TopKMode::F1).unwrap(), 1.0);
        }
        assert_eq!(topk_agreement(&[1.0, 0.0], &[0.0, 1.0], 1, TopKMode::F1).unwrap(), 0.0);
        assert_eq!(topk_agreement(&LAMBDA, &PHI2, 1, TopKMode::F1).unwrap(), 0.0);
        assert_eq!(topk_agreement(&[1.0, 0.1], &[-1.0, 0.1], 1, TopKMode::Signed).unwrap(), 0.0);
        assert_eq!(topk_agreement(&[1.0, 0.1], &[-1.0, 0.1], 1, TopKMode::F1).unwrap(), 1.0);
        assert!(topk_agreement(&v, &v, 0, TopKMode::F1).is_err());
        assert!(topk_agreement(&v, &v, 4, TopKMode::F1).is_err());
    }

    #[test]
    fn metric_strings_round_trip() {
        for m in Metric::all_for_dimension(3) {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("manhattan".parse::<Metric>().is_err());
        assert!("topk_f1:x".parse::<Metric>().is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
