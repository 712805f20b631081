use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed per-feature contributions for one instance and one model output.
///
/// Scores are in contribution form: for explainers with the completeness
/// property, `base_value + scores.sum()` equals the explained output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub scores: Vec<f64>,
    pub base_value: Option<f64>,
    /// Explained class. Always 1 in this crate.
    pub target: u8,
    pub explainer_id: String,
}

impl Attribution {
    pub fn new(scores: Vec<f64>, base_value: Option<f64>, explainer_id: impl Into<String>) -> Result<Self> {
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("attribution contains non-finite scores"));
        }
        if base_value.is_some_and(|b| !b.is_finite()) {
            return Err(Error::numeric("attribution base value is not finite"));
        }
        Ok(Attribution {
            scores,
            base_value,
            target: 1,
            explainer_id: explainer_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `|f(x) - base - sum(scores)|`, or `None` without a base value.
    pub fn completeness_residual(&self, output: f64) -> Option<f64> {
        self.base_value
            .map(|b| (output - b - self.scores.iter().sum::<f64>()).abs())
    }
}

/// Feature indices ordered by decreasing `|score|`; ties keep index order.
pub fn rank_by_magnitude(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
    idx
}

/// CSV with columns `instance,explainer,base_value,phi_1..phi_M`; a
/// missing base value is written as an empty cell.
pub fn write_attributions_csv<W: Write>(rows: &[(usize, Attribution)], out: W) -> Result<()> {
    let m = rows.first().map_or(0, |(_, a)| a.len());
    if rows.iter().any(|(_, a)| a.len() != m) {
        return Err(Error::validation("attributions have different lengths"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["instance", "explainer", "base_value"].map(String::from).to_vec();
    header.extend((1..=m).map(|j| format!("phi_{j}")));
    w.write_record(&header)?;
    for (i, a) in rows {
        let mut rec = vec![i.to_string(), a.explainer_id.clone(), a.base_value.map(|b| format!("{b:?}")).unwrap_or_default()];
        rec.extend(a.scores.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_attributions_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, Attribution)>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::from(e).at_path(path))?;
    let mut out = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let bad = |message: String| Error::Parse { row, message };
        if rec.len() < 4 {
            return Err(bad("expected instance, explainer, base_value and at least one score".into()));
        }
        let instance = rec[0].trim().parse().map_err(|_| bad(format!("bad instance `{}`", &rec[0])))?;
        let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        let base = if rec[2].trim().is_empty() { None } else { Some(number(&rec[2])?) };
        let scores = rec.iter().skip(3).map(number).collect::<Result<Vec<_>>>()?;
        out.push((instance, Attribution::new(scores, base, &rec[1])?));
    }
    Ok(out)
}
