//! Aggregation and explainer ranking over report rows.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::report::{format_value, ReportRow};
use crate::error::{Error, Result};
use crate::groundtruth::GtProvenance;
use crate::metrics::{self, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Dataset,
    Model,
    Explainer,
    Measure,
}

impl GroupKey {
    fn of<'a>(&self, row: &'a ReportRow) -> &'a str {
        match self {
            GroupKey::Dataset => &row.dataset,
            GroupKey::Model => &row.model,
            GroupKey::Explainer => &row.explainer,
            GroupKey::Measure => &row.measure,
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKey::Dataset => "dataset",
            GroupKey::Model => "model",
            GroupKey::Explainer => "explainer",
            GroupKey::Measure => "measure",
        })
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset" => Ok(GroupKey::Dataset),
            "model" => Ok(GroupKey::Model),
            "explainer" => Ok(GroupKey::Explainer),
            "measure" => Ok(GroupKey::Measure),
            _ => Err(Error::Config(format!("unknown group key `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub key: Vec<String>,
    /// Instance rows with a defined value.
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean, median and std of per-instance values grouped by `keys`, in
/// lexicographic key order. Aggregate rows and NaN values are skipped.
pub fn summarize(rows: &[ReportRow], keys: &[GroupKey]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::validation("cannot summarize an empty report"));
    }
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.is_aggregate()) {
        let key = keys.iter().map(|k| k.of(row).to_owned()).collect();
        let values = groups.entry(key).or_default();
        if !row.value.is_nan() {
            values.push(row.value);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, values)| {
            let mean = metrics::mean(&values);
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
            SummaryRow {
                key,
                n: values.len(),
                mean,
                median: metrics::median(&values),
                std: var.sqrt(),
            }
        })
        .collect())
}

pub fn write_summary_csv<W: Write>(keys: &[GroupKey], summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
    header.extend(["n", "mean", "median", "std"].map(String::from));
    w.write_record(&header)?;
    for s in summary {
        let mut rec = s.key.clone();
        rec.push(s.n.to_string());
        rec.extend([s.mean, s.median, s.std].map(format_value));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub rank: usize,
    pub explainer: String,
    pub mean: f64,
    pub median: f64,
    pub n: usize,
}

/// Explainers ordered by mean agreement with the chosen ground truth,
/// ties broken by median and then by name.
pub fn compare_explainers(rows: &[ReportRow], metric: &Metric, provenance: GtProvenance) -> Result<Vec<RankingRow>> {
    let measure = format!("gt:{provenance}/{metric}");
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.is_aggregate() && r.measure == measure) {
        let values = groups.entry(row.explainer.as_str()).or_default();
        if !row.value.is_nan() {
            values.push(row.value);
        }
    }
    if groups.is_empty() {
        return Err(Error::validation(format!("report has no `{measure}` rows")));
    }
    if groups.len() < 2 {
        return Err(Error::validation("comparing explainers needs at least two of them"));
    }
    let mut ranked: Vec<RankingRow> = groups
        .into_iter()
        .map(|(name, values)| RankingRow {
            rank: 0,
            explainer: name.to_owned(),
            mean: metrics::mean(&values),
            median: metrics::median(&values),
            n: values.len(),
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.mean
            .total_cmp(&a.mean)
            .then(b.median.total_cmp(&a.median))
            .then_with(|| a.explainer.cmp(&b.explainer))
    });
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ranked)
}

pub fn write_ranking_csv<W: Write>(ranking: &[RankingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "explainer", "mean", "median", "n"])?;
    for r in ranking {
        w.write_record([
            r.rank.to_string(),
            r.explainer.clone(),
            format_value(r.mean),
            format_value(r.median),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
