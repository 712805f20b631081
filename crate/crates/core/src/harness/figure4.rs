//! Baseline-vector comparison on `Y = 2 x0 - x1`.
//!
//! Generates 1000 instances with noise 0.3, fits a logistic regression and
//! computes, for every instance, the importance vector assigned by four
//! methods: the boundary derivative of the generating polynomial, the
//! model weights, per-feature nullification to the dataset mean, and the
//! additive log-odds terms of the model.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ModelSpec;
use super::report::format_value;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::groundtruth::{mias_logistic, seneca_ground_truth, weights_ground_truth, BoundarySearch};
use crate::models::{FittedModel, LogisticModel};
use crate::robustness::per_feature_change;
use crate::seed::RunSeed;
use crate::synthdata::{generate_seneca_rc, PolynomialSpec};

pub const FIGURE4_N: usize = 1000;
pub const FIGURE4_NOISE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure4Method {
    SenecaRc,
    ModelWeights,
    Robustness,
    Mias,
}

impl Figure4Method {
    pub const ALL: [Figure4Method; 4] = [
        Figure4Method::SenecaRc,
        Figure4Method::ModelWeights,
        Figure4Method::Robustness,
        Figure4Method::Mias,
    ];
}

impl fmt::Display for Figure4Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure4Method::SenecaRc => "seneca_rc",
            Figure4Method::ModelWeights => "model_weights",
            Figure4Method::Robustness => "robustness",
            Figure4Method::Mias => "mias",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuiverRow {
    pub x0: f64,
    pub x1: f64,
    pub label: u8,
    pub method: Figure4Method,
    pub v0: f64,
    pub v1: f64,
}

#[derive(Debug, Clone)]
pub struct Figure4Result {
    pub dataset: Dataset,
    pub model: LogisticModel,
    /// Per method, one vector per dataset row, in row order.
    pub vectors: Vec<(Figure4Method, Vec<[f64; 2]>)>,
}

impl Figure4Result {
    pub fn method(&self, method: Figure4Method) -> &[[f64; 2]] {
        &self
            .vectors
            .iter()
            .find(|(m, _)| *m == method)
            .expect("every method is computed")
            .1
    }

    /// Method-major quiver table.
    pub fn rows(&self) -> Vec<QuiverRow> {
        let ds = &self.dataset;
        self.vectors
            .iter()
            .flat_map(|(method, vs)| {
                vs.iter().enumerate().map(move |(i, v)| QuiverRow {
                    x0: ds.row(i)[0],
                    x1: ds.row(i)[1],
                    label: ds.labels()[i],
                    method: *method,
                    v0: v[0],
                    v1: v[1],
                })
            })
            .collect()
    }

    /// CSV with columns `x0,x1,label,method,v0,v1`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x0", "x1", "label", "method", "v0", "v1"])?;
        for r in self.rows() {
            w.write_record([
                format_value(r.x0),
                format_value(r.x1),
                r.label.to_string(),
                r.method.to_string(),
                format_value(r.v0),
                format_value(r.v1),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

pub fn figure4_polynomial() -> PolynomialSpec {
    PolynomialSpec::linear(&[2.0, -1.0])
}

pub fn run_figure4_experiment(seed: RunSeed) -> Result<Figure4Result> {
    let spec = figure4_polynomial();
    let ds = generate_seneca_rc(&spec, FIGURE4_N, FIGURE4_NOISE, 0, seed.child("data", 0))?;
    let model = match ModelSpec::logistic_default().fit(&ds, seed.child("train", 0))? {
        FittedModel::Logistic(m) => m,
        _ => unreachable!("logistic spec fits a logistic model"),
    };
    let means = ds.feature_means();
    let search = BoundarySearch::default();
    let rows: Vec<usize> = (0..ds.n_instances()).collect();

    let seneca = rows
        .par_iter()
        .map(|&i| Ok(pair(&seneca_ground_truth(&model, &spec, ds.row(i), &ds, &search)?.values)))
        .collect::<Result<Vec<_>>>()?;
    let weights = pair(&weights_ground_truth(&model).values);
    let robustness = rows
        .iter()
        .map(|&i| pair(&per_feature_change(&model, ds.row(i), &means)))
        .collect();
    let mias = rows
        .iter()
        .map(|&i| pair(&mias_logistic(&model, ds.row(i)).values))
        .collect();

    Ok(Figure4Result {
        vectors: vec![
            (Figure4Method::SenecaRc, seneca),
            (Figure4Method::ModelWeights, vec![weights; ds.n_instances()]),
            (Figure4Method::Robustness, robustness),
            (Figure4Method::Mias, mias),
        ],
        dataset: ds,
        model,
    })
}
