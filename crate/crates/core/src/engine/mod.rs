//! Cautious pseudo labeling: teacher pre-training, top-k selection under
//! multi-view confidence, set updates, student fine-tuning, and the
//! error-bound and convergence diagnostics.

pub mod data;
mod diagnostics;
pub(crate) mod run;
mod select;
mod state;
pub mod train;

pub use data::{load_dataset, Dataset, EvalSet, TaskData};
pub use diagnostics::{
    covariance_diagnostic, error_bound, loss_trajectory_check, CovarianceDiagnostic, ErrorBound, LossCheckReport,
    LossCheckStep, LOSS_CHECK_TOL,
};
pub use run::{pretrain_teacher, run_cpl, run_random_pl, run_seed, run_seed_observed, RunOutput, SeedRun, StopReason, GPI_TRIALS};
pub use select::{select_random, select_top_k, StrategySelection};
pub use state::{IterationRecord, PlState, PseudoLabel};
pub use train::Metrics;
