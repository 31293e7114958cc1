//! Experiment runner, metrics, result files and verification suites for
//! reward-profiled policy-gradient training.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod output;
pub mod verify;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, CellResult, GridPoint};
pub use metrics::MetricsRecord;
pub use output::{write_experiment, CsvRow};
