//! Benchmark runner, report format, and canned experiments.

pub mod config;
pub mod figure4;
pub mod report;
pub mod runner;
pub mod summary;

pub use config::{BenchmarkConfig, DatasetSource, EvaluationSpec, GroundTruthMethod, ModelSpec, CONFIG_VERSION};
pub use figure4::{run_figure4_experiment, Figure4Method, Figure4Result};
pub use report::{EvaluationReport, InstanceKey, ReportRow, RunMetadata};
pub use runner::{run_benchmark, TOOL_VERSION};
pub use summary::{compare_explainers, summarize, GroupKey};
