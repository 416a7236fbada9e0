//! Simulation harness: synthetic datasets with a known truth, repeated
//! experiment runs over dataset draws and method reruns, and the metrics
//! used to compare the original and derandomized procedures (power, FDR,
//! and the two selection-variability measures).

mod config;
mod dataset;
mod experiment;
mod metrics;

pub use config::{Covariance, ExperimentConfig};
pub use dataset::{ar1_covariance, generate_dataset, ExperimentTruth};
pub use experiment::{
    run_experiment, write_records_csv, write_summary_json, ExperimentReport, MethodKind,
    RunRecord,
};
pub use metrics::{
    baseline_frequency, score_selection, selection_variability, MethodMetrics, MetricsReport,
};
