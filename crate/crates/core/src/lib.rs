//! Accelerated proximal-gradient solvers for composite objectives
//! `phi(x) = g(x) + h(x)`: plain proximal gradient, Nesterov/FISTA with and
//! without restarts, Anderson acceleration with restarts, and damped Anderson
//! acceleration with monotonicity control (DAAREM), optionally initialised
//! by Nesterov iterations (NIDAAREM).
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use proxaccel::{run_daarem, DaaremConfig, LassoProblem, StepConfig};
//!
//! let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
//! let y = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
//! let prob = LassoProblem::new(x, y, 0.1).unwrap();
//! let report = run_daarem(&prob, &DVector::zeros(2), StepConfig::for_problem(&prob), &DaaremConfig::default()).unwrap();
//! assert!(report.converged);
//! ```

pub mod composite;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod simgen;
pub mod solvers;

pub use composite::{converged, objective, pg_step, residual, CompositeProblem, ParamVector, StepConfig};
pub use error::{Error, Result};
pub use linalg::{condition_number, damping_solve, reg_ls_solve, AAWindow, WindowSvd};
pub use problems::{BoxQPProblem, LassoProblem, LogisticProblem, MatrixCompletionProblem};
pub use solvers::{
    run_aa_restart, run_daarem, run_nesterov, run_nesterov_restart, run_nidaarem, run_pgd, DaaremConfig,
    Monitor, RestartCriterion, RunReport, StepKind, TraceRecord,
};
