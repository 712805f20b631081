//! Evaluation harness for local feature-attribution explanations.
//!
//! The crate bundles synthetic data generators with known importance,
//! small trainable models, a handful of model-agnostic explainers, and the
//! evaluation measures used to score them: robustness (deletion,
//! preservation, continuity), ground truth from data generators and from
//! interpretable models, similarity metrics, and model-randomization
//! sanity checks. The [`harness`] module wires these into a config-driven
//! benchmark runner with deterministic, byte-stable reports.

pub mod attribution;
pub mod dataset;
pub mod error;
pub mod explainers;
pub mod groundtruth;
pub mod harness;
mod linalg;
pub mod metrics;
pub mod models;
pub mod randomization;
pub mod robustness;
pub mod seed;
pub mod synthdata;

pub use attribution::Attribution;
pub use dataset::{Dataset, DatasetSchema, Instance, Provenance};
pub use error::{Error, Result};
pub use models::{FittedModel, Model, Output};
pub use seed::{RunSeed, StreamRng};
