//! Tabular binary-classification datasets and their CSV format.
//!
//! CSV layout: a header row, feature columns in order, optional
//! `gt_<feature>` columns carrying per-instance ground-truth importance,
//! and a `label` column with values in {0, 1}. Missing values are rejected.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a dataset came from: a generator id with its parameters and seed,
/// or a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(generator: impl Into<String>, params: serde_json::Value, seed: Option<u64>) -> Self {
        Provenance {
            generator: generator.into(),
            params,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    ground_truth: Option<Array2<f64>>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        ground_truth: Option<Array2<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let (n, m) = features.dim();
        if n == 0 || m == 0 {
            return Err(Error::validation(format!("dataset must be non-empty, got {n}x{m}")));
        }
        if labels.len() != n {
            return Err(Error::validation(format!("{} labels for {n} rows", labels.len())));
        }
        if let Some(pos) = labels.iter().position(|&l| l > 1) {
            return Err(Error::validation(format!("row {pos}: label {} is not 0/1", labels[pos])));
        }
        if feature_names.len() != m {
            return Err(Error::validation(format!("{} feature names for {m} columns", feature_names.len())));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("features contain NaN or infinite values"));
        }
        if let Some(gt) = &ground_truth {
            if gt.dim() != (n, m) {
                return Err(Error::validation(format!(
                    "ground truth shape {:?} differs from features {:?}",
                    gt.dim(),
                    (n, m)
                )));
            }
            if gt.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("ground truth contains NaN or infinite values"));
            }
        }
        // rows are handed out as slices
        let features = features.as_standard_layout().into_owned();
        let ground_truth = ground_truth.map(|g| g.as_standard_layout().into_owned());
        Ok(Dataset {
            features,
            labels,
            feature_names,
            ground_truth,
            provenance,
        })
    }

    /// Default feature names `x0..x{m-1}`.
    pub fn default_names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("x{j}")).collect()
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn ground_truth(&self) -> Option<&Array2<f64>> {
        self.ground_truth.as_ref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features
            .row(i)
            .to_slice()
            .expect("features are stored row-major")
    }

    pub fn ground_truth_row(&self, i: usize) -> Option<&[f64]> {
        self.ground_truth
            .as_ref()
            .map(|g| g.row(i).to_slice().expect("ground truth is stored row-major"))
    }

    pub fn instance(&self, i: usize) -> Instance {
        Instance {
            values: self.row(i).to_vec(),
            index: Some(i),
        }
    }

    pub fn feature_means(&self) -> Vec<f64> {
        self.features
            .mean_axis(Axis(0))
            .expect("non-empty dataset")
            .to_vec()
    }

    /// Population standard deviation per feature.
    pub fn feature_stds(&self) -> Vec<f64> {
        self.features
            .axis_iter(Axis(1))
            .map(|col: ArrayView1<f64>| col.std(0.0))
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// Subset of rows, keeping provenance. Indices must be in range.
    pub fn select(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_instances()) {
            return Err(Error::validation(format!("row index {bad} out of range")));
        }
        Dataset::new(
            self.features.select(Axis(0), rows),
            rows.iter().map(|&r| self.labels[r]).collect(),
            self.feature_names.clone(),
            self.ground_truth.as_ref().map(|g| g.select(Axis(0), rows)),
            self.provenance.clone(),
        )
    }

    /// Same data with the ground-truth block replaced.
    pub fn with_ground_truth(&self, ground_truth: Option<Array2<f64>>) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            self.labels.clone(),
            self.feature_names.clone(),
            ground_truth,
            self.provenance.clone(),
        )
    }
}

/// A single point in feature space, optionally tied to a dataset row.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub values: Vec<f64>,
    pub index: Option<usize>,
}

impl Instance {
    pub fn new(values: Vec<f64>, index: Option<usize>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("instance contains NaN or infinite values"));
        }
        Ok(Instance { values, index })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column mapping used when reading a CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSchema {
    pub label_column: String,
    pub ground_truth_prefix: String,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        DatasetSchema {
            label_column: "label".into(),
            ground_truth_prefix: "gt_".into(),
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::Parse {
            row,
            message: format!("missing value in column `{column}`"),
        });
    }
    let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
        row,
        message: format!("cannot parse `{trimmed}` in column `{column}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("non-finite value `{trimmed}` in column `{column}`"),
        });
    }
    Ok(v)
}

/// Reads a dataset CSV. Row numbers in errors are 1-based data rows
/// (the header is row 0).
pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::from(e).at_path(path))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let label_idx = headers
        .iter()
        .position(|h| *h == schema.label_column)
        .ok_or_else(|| Error::validation(format!("label column `{}` not found", schema.label_column)))?;

    let mut feature_cols = Vec::new();
    let mut gt_cols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i == label_idx {
            continue;
        }
        match h.strip_prefix(&schema.ground_truth_prefix) {
            Some(feature) => gt_cols.push((i, feature.to_owned())),
            None => feature_cols.push(i),
        }
    }
    if feature_cols.is_empty() {
        return Err(Error::validation("no feature columns"));
    }
    let names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    // gt columns must cover exactly the feature set; map them into feature order
    let gt_order: Option<Vec<usize>> = if gt_cols.is_empty() {
        None
    } else {
        if gt_cols.len() != names.len() {
            return Err(Error::validation(format!(
                "{} ground-truth columns for {} features",
                gt_cols.len(),
                names.len()
            )));
        }
        let mut order = Vec::with_capacity(names.len());
        for name in &names {
            let col = gt_cols
                .iter()
                .find(|(_, f)| f == name)
                .ok_or_else(|| {
                    Error::validation(format!("missing ground-truth column `{}{name}`", schema.ground_truth_prefix))
                })?;
            order.push(col.0);
        }
        Some(order)
    };

    let m = names.len();
    let mut values = Vec::new();
    let mut gt_values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for &c in &feature_cols {
            values.push(parse_cell(&record[c], row, &headers[c])?);
        }
        if let Some(order) = &gt_order {
            for &c in order {
                gt_values.push(parse_cell(&record[c], row, &headers[c])?);
            }
        }
        let label = parse_cell(&record[label_idx], row, &headers[label_idx])?;
        if label != 0.0 && label != 1.0 {
            return Err(Error::validation(format!("row {row}: label {label} is not 0/1")));
        }
        labels.push(label as u8);
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::validation("dataset has no rows"));
    }
    let features = Array2::from_shape_vec((n, m), values).expect("row-major fill");
    let ground_truth = gt_order.map(|_| Array2::from_shape_vec((n, m), gt_values).expect("row-major fill"));
    Dataset::new(
        features,
        labels,
        names,
        ground_truth,
        Provenance::new(
            "csv",
            serde_json::json!({ "path": path.display().to_string() }),
            None,
        ),
    )
}

/// Writes the dataset in the CSV layout above. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    if ds.n_instances() == 0 || ds.n_features() == 0 {
        return Err(Error::validation("refusing to write an empty dataset"));
    }
    let file = File::create(path.as_ref())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let mut header: Vec<String> = ds.feature_names.clone();
    if ds.ground_truth.is_some() {
        header.extend(ds.feature_names.iter().map(|n| format!("gt_{n}")));
    }
    header.push("label".into());
    writer.write_record(&header)?;
    for i in 0..ds.n_instances() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(gt) = ds.ground_truth_row(i) {
            rec.extend(gt.iter().map(|v| format!("{v:?}")));
        }
        rec.push(ds.labels[i].to_string());
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    writer
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?
        .flush()?;
    Ok(())
}
