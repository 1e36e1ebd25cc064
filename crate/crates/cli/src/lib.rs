//! Command-line front end for `proxaccel`: TOML-configured single solves,
//! multi-seed benchmark sweeps, warm-started regularization paths and
//! synthetic dataset generation.

pub mod config;
pub mod error;
pub mod experiment;
pub mod instance;
pub mod output;
pub mod path;

pub use config::{ExperimentConfig, MethodKind, MethodSpec, PathSpec, ProblemSpec};
pub use error::{CliError, Result};
pub use experiment::{execute, run_experiment, run_method, step_config, ExperimentOutcome, RunRecord, SummaryRow};
pub use instance::{build_instance, build_unpenalized, lambda_max_lasso, write_dataset, Instance};
pub use output::fmt_num;
pub use path::{execute_path, run_path, solve_path, PathOutcome, PathPoint, PathRun};
