//! Command-line experiments over the `misspec` library.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{EnvSpec, ExperimentConfig, OutputFormat, RewardSource, Tolerances};
pub use error::RunError;
pub use experiments::{run_experiment, Experiment, ExperimentRegistry, Output};
pub use report::{emit_report, write_report, Report, ReportStatus};
