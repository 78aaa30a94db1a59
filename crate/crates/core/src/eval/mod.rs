//! Metrics, run reports and their CSV/diagnostic views.

mod cli;
pub mod metrics;
mod report;

pub use cli::cli_main;
pub use metrics::{accuracy_and_error, auc, average_precision};
pub use report::{diagnose, run_experiment, series_csv, DiagnoseRow, EvalReport, MetricSummary, RunReport, SCHEMA_VERSION};
