//! Iteration schemes for composite problems: plain proximal gradient,
//! Nesterov/FISTA with and without restarts, Anderson acceleration with
//! systematic restarts, DAAREM, and Nesterov-initialised DAAREM.
//!
//! Every solver counts each application of the proximal-gradient map in
//! [`RunReport::pg_steps`] and stops once the fixed-point residual of the
//! point it just mapped satisfies [`converged`](crate::composite::converged).
//! The reported solution is that point's image under `G_t`.

mod accept;
mod anderson;
mod daarem;
mod nesterov;
mod nidaarem;
mod pgd;

pub use accept::{accept_objective, accept_residual, active_rows, cycle_accept, eps_schedule_step};
pub use anderson::run_aa_restart;
pub use daarem::{damping_level, run_daarem, DaaremConfig, DaaremState, Monitor};
pub use nesterov::{momentum_next, run_nesterov, run_nesterov_restart, NesterovState, RestartCriterion};
pub use nidaarem::{run_nidaarem, DEFAULT_SWITCH_CAP};
pub use pgd::run_pgd;

use std::fmt;
use std::time::Instant;

use crate::composite::{check_finite, objective, pg_eval, CompositeProblem, ParamVector, PgPoint, StepConfig};
use crate::error::Result;

/// How the iterate recorded in a trace row was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// Plain proximal-gradient step.
    Pg,
    /// Momentum step.
    Nesterov,
    /// Momentum cleared after a restart criterion fired.
    Restart,
    AaAccepted,
    AaRejected,
    /// Hand-over from the Nesterov phase to DAAREM.
    Switch,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Pg => "pg",
            StepKind::Nesterov => "nesterov",
            StepKind::Restart => "restart",
            StepKind::AaAccepted => "aa_accepted",
            StepKind::AaRejected => "aa_rejected",
            StepKind::Switch => "switch",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based outer iteration.
    pub iter: usize,
    /// Objective of the iterate held at the end of the iteration.
    pub objective: f64,
    /// Norm of the residual evaluated during the iteration.
    pub resid_norm: f64,
    /// Cumulative proximal-gradient applications.
    pub pg_steps: usize,
    pub step_kind: StepKind,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub pg_steps: usize,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub final_x: ParamVector,
    pub final_obj: f64,
    /// Seconds.
    pub wall_time: f64,
    /// Accepted Anderson extrapolations (zero for non-Anderson solvers).
    pub n_aa_accepted: usize,
    /// Iteration at which a Nesterov phase handed over, if any.
    pub switch_iter: Option<usize>,
}

impl RunReport {
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.trace.iter().map(|r| r.objective)
    }
}

/// Bookkeeping shared by every solver and carried across NIDAAREM phases.
pub(crate) struct Tracker<'a, P: ?Sized> {
    pub problem: &'a P,
    pub cfg: StepConfig,
    pub pg_steps: usize,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub n_aa: usize,
    pub switch_iter: Option<usize>,
    start: Instant,
}

impl<'a, P: CompositeProblem + ?Sized> Tracker<'a, P> {
    pub fn new(problem: &'a P, cfg: StepConfig, x0: &ParamVector) -> Result<Self> {
        cfg.validate(problem)?;
        if x0.len() != problem.dim() {
            return Err(crate::error::Error::DimensionMismatch {
                expected: problem.dim(),
                got: x0.len(),
            });
        }
        check_finite(x0)?;
        Ok(Self {
            problem,
            cfg,
            pg_steps: 0,
            iterations: 0,
            trace: Vec::new(),
            n_aa: 0,
            switch_iter: None,
            start: Instant::now(),
        })
    }

    pub fn pg(&mut self, x: &ParamVector) -> Result<PgPoint> {
        self.pg_steps += 1;
        pg_eval(self.problem, x, self.cfg.t)
    }

    /// Objective at a proximal-gradient output, reusing its `h` value.
    pub fn phi_at(&self, pt: &PgPoint) -> f64 {
        if pt.h == f64::INFINITY {
            return pt.h;
        }
        self.problem.eval_g(&pt.x) + pt.h
    }

    pub fn phi(&self, x: &ParamVector) -> f64 {
        objective(self.problem, x)
    }

    pub fn exhausted(&self) -> bool {
        self.iterations >= self.cfg.max_iter
    }

    pub fn is_converged(&self, resid_norm: f64) -> bool {
        resid_norm <= self.cfg.eps_stop
    }

    pub fn record(&mut self, objective: f64, resid_norm: f64, step_kind: StepKind) {
        self.iterations += 1;
        self.trace.push(TraceRecord {
            iter: self.iterations,
            objective,
            resid_norm,
            pg_steps: self.pg_steps,
            step_kind,
        });
    }

    pub fn finish(self, converged: bool, final_x: ParamVector, final_obj: f64) -> RunReport {
        RunReport {
            pg_steps: self.pg_steps,
            iterations: self.iterations,
            trace: self.trace,
            converged,
            final_x,
            final_obj,
            wall_time: self.start.elapsed().as_secs_f64(),
            n_aa_accepted: self.n_aa,
            switch_iter: self.switch_iter,
        }
    }
}

/// How a solver phase ended, with the iterate it hands back and its objective.
pub(crate) enum PhaseEnd {
    Converged(ParamVector, f64),
    Exhausted(ParamVector, f64),
    Switched(ParamVector, f64),
}

#[cfg(test)]
pub(crate) mod fixtures {
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::problems::{BoxQPProblem, LassoProblem};

    /// Smooth quadratic with the given eigenvalues in a random rotation,
    /// expressed as a box QP whose box never binds.
    pub fn quadratic(eigs: &[f64], seed: u64) -> (BoxQPProblem, DVector<f64>) {
        let p = eigs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(p, p, |_, _| rng.random::<f64>() - 0.5);
        let q = b.qr().q();
        let qm = &q * DMatrix::from_diagonal(&DVector::from_row_slice(eigs)) * q.transpose();
        let qm = (&qm + qm.transpose()) * 0.5;
        let x_star = DVector::from_fn(p, |_, _| rng.random::<f64>() * 0.5 - 0.25);
        let lin = -(&qm * &x_star);
        (BoxQPProblem::new(qm, lin).unwrap(), x_star)
    }

    pub fn small_lasso(n: usize, p: usize, frac: f64, seed: u64) -> LassoProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let beta = DVector::from_fn(p, |i, _| if i % 4 == 0 { 1.0 + i as f64 * 0.1 } else { 0.0 });
        let y = &x * beta + DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let lam = frac * LassoProblem::zero_solution_lambda(&x, &y);
        LassoProblem::new(x, y, lam).unwrap()
    }
}
