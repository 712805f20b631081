//! Long-format evaluation reports.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Instance column of a report row: a dataset row or an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstanceKey {
    Index(usize),
    Mean,
    Median,
}

impl InstanceKey {
    pub fn index(&self) -> Option<usize> {
        match self {
            InstanceKey::Index(i) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceKey::Index(i) => write!(f, "{i}"),
            InstanceKey::Mean => f.write_str("mean"),
            InstanceKey::Median => f.write_str("median"),
        }
    }
}

impl Serialize for InstanceKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl std::str::FromStr for InstanceKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(InstanceKey::Mean),
            "median" => Ok(InstanceKey::Median),
            _ => s
                .parse()
                .map(InstanceKey::Index)
                .map_err(|_| Error::validation(format!("bad instance key `{s}`"))),
        }
    }
}

/// One long-format row. In JSON, undefined values become `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dataset: String,
    pub model: String,
    pub explainer: String,
    pub instance: InstanceKey,
    pub measure: String,
    pub value: f64,
    pub flags: String,
}

impl ReportRow {
    pub fn new(
        dataset: &str,
        model: &str,
        explainer: &str,
        instance: InstanceKey,
        measure: impl Into<String>,
        value: f64,
        flags: impl Into<String>,
    ) -> Self {
        ReportRow {
            dataset: dataset.to_owned(),
            model: model.to_owned(),
            explainer: explainer.to_owned(),
            instance,
            measure: measure.into(),
            value,
            flags: flags.into(),
        }
    }

    pub fn is_aggregate(&self) -> bool {
        self.instance.index().is_none()
    }

    /// Fills in dataset/model columns left empty by lower-level evaluators.
    pub fn tagged(mut self, dataset: &str, model: &str) -> Self {
        if self.dataset.is_empty() {
            self.dataset = dataset.to_owned();
        }
        if self.model.is_empty() {
            self.model = model.to_owned();
        }
        self
    }
}

/// Deterministic run metadata written next to the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub metadata: RunMetadata,
    /// Wall-clock duration; kept out of the byte-stable files.
    pub wall_time_ms: Option<u128>,
}

pub const REPORT_HEADER: [&str; 7] = ["dataset", "model", "explainer", "instance", "measure", "value", "flags"];

pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_rows_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset.as_str(),
            r.model.as_str(),
            r.explainer.as_str(),
            &r.instance.to_string(),
            r.measure.as_str(),
            &format_value(r.value),
            r.flags.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::from(e).at_path(path))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != REPORT_HEADER.len() {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected {} fields", REPORT_HEADER.len()),
            });
        }
        let value = rec[5].parse::<f64>().map_err(|_| Error::Parse {
            row: i + 1,
            message: format!("bad value `{}`", &rec[5]),
        })?;
        rows.push(ReportRow {
            dataset: rec[0].to_owned(),
            model: rec[1].to_owned(),
            explainer: rec[2].to_owned(),
            instance: rec[3].parse()?,
            measure: rec[4].to_owned(),
            value,
            flags: rec[6].to_owned(),
        });
    }
    Ok(rows)
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::validation(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl EvaluationReport {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_rows_csv(&self.rows, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Writes `report.csv`, `report.meta.json` (both byte-stable for a given
    /// config and seed) and `timing.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("report.csv"), self.to_csv_string()?.as_bytes())?;
        let mut meta = serde_json::to_string_pretty(&self.metadata)?;
        meta.push('\n');
        write_atomic(&dir.join("report.meta.json"), meta.as_bytes())?;
        if let Some(ms) = self.wall_time_ms {
            let timing = serde_json::json!({ "wall_time_ms": ms as u64 });
            write_atomic(&dir.join("timing.json"), timing.to_string().as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ReportRow::new("d", "m", "lime", InstanceKey::Index(3), "gt:mias_logistic/spearman", 0.25, ""),
            ReportRow::new("d", "m", "lime", InstanceKey::Mean, "gt:mias_logistic/spearman", f64::NAN, "x"),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        std::fs::write(&p, buf).unwrap();
        let back = read_rows_csv(&p).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].value.is_nan());
        assert_eq!(back[1].instance, InstanceKey::Mean);
    }
}
