//! Composite objectives `phi = g + h` and the proximal-gradient fixed-point map.
//!
//! Every solver in this crate sees a problem only through [`CompositeProblem`]:
//! the smooth part `g` with its gradient and Lipschitz constant, and the
//! nonsmooth part `h` through its proximal mapping. Matrix-valued unknowns are
//! stored row-major in a flat [`ParamVector`].

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Flat parameter vector. Matrix iterates are stored row-major.
pub type ParamVector = DVector<f64>;

/// One instance of `min g(x) + h(x)`.
///
/// Implementations are immutable after construction and must tolerate
/// concurrent evaluation from several threads.
pub trait CompositeProblem: Send + Sync {
    /// Length of the flattened parameter vector.
    fn dim(&self) -> usize;

    /// Smooth part `g`.
    fn eval_g(&self, x: &ParamVector) -> f64;

    fn grad_g(&self, x: &ParamVector) -> ParamVector;

    /// Nonsmooth part `h`; `+inf` outside the domain of an indicator.
    fn eval_h(&self, x: &ParamVector) -> f64;

    /// `prox_{s h}(x) = argmin_z s*h(z) + ||z - x||^2 / 2`, for `s > 0`.
    fn prox_h(&self, x: &ParamVector, s: f64) -> Result<ParamVector>;

    /// Lipschitz constant of `grad_g` (an upper bound is fine).
    fn lipschitz(&self) -> f64;

    /// Proximal mapping together with `h` evaluated at its output.
    ///
    /// The default evaluates `h` afresh; backends where the prox already
    /// yields `h(z)` (the nuclear norm, say) override this.
    fn prox_h_with_value(&self, x: &ParamVector, s: f64) -> Result<(ParamVector, f64)> {
        let z = self.prox_h(x, s)?;
        let h = self.eval_h(&z);
        Ok((z, h))
    }
}

impl<P: CompositeProblem + ?Sized> CompositeProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_g(&self, x: &ParamVector) -> f64 {
        (**self).eval_g(x)
    }
    fn grad_g(&self, x: &ParamVector) -> ParamVector {
        (**self).grad_g(x)
    }
    fn eval_h(&self, x: &ParamVector) -> f64 {
        (**self).eval_h(x)
    }
    fn prox_h(&self, x: &ParamVector, s: f64) -> Result<ParamVector> {
        (**self).prox_h(x, s)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn prox_h_with_value(&self, x: &ParamVector, s: f64) -> Result<(ParamVector, f64)> {
        (**self).prox_h_with_value(x, s)
    }
}

impl<P: CompositeProblem + ?Sized> CompositeProblem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_g(&self, x: &ParamVector) -> f64 {
        (**self).eval_g(x)
    }
    fn grad_g(&self, x: &ParamVector) -> ParamVector {
        (**self).grad_g(x)
    }
    fn eval_h(&self, x: &ParamVector) -> f64 {
        (**self).eval_h(x)
    }
    fn prox_h(&self, x: &ParamVector, s: f64) -> Result<ParamVector> {
        (**self).prox_h(x, s)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn prox_h_with_value(&self, x: &ParamVector, s: f64) -> Result<(ParamVector, f64)> {
        (**self).prox_h_with_value(x, s)
    }
}

/// Steplength, residual tolerance and iteration cap shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub t: f64,
    pub eps_stop: f64,
    pub max_iter: usize,
}

impl StepConfig {
    /// `t = 1/L_g`, `eps_stop = 1e-8`, `max_iter = 500_000`.
    pub fn for_problem<P: CompositeProblem + ?Sized>(problem: &P) -> Self {
        Self {
            t: 1.0 / problem.lipschitz(),
            eps_stop: 1e-8,
            max_iter: 500_000,
        }
    }

    pub fn with_eps_stop(mut self, eps_stop: f64) -> Self {
        self.eps_stop = eps_stop;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Checks `0 < t <= 1/L_g`, `eps_stop > 0` and `max_iter >= 1`.
    pub fn validate<P: CompositeProblem + ?Sized>(&self, problem: &P) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "steplength must be positive, got {}",
                self.t
            )));
        }
        let t_max = 1.0 / problem.lipschitz();
        // 1/L computed two ways may differ in the last ulp
        if self.t > t_max * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::InvalidArgument(format!(
                "steplength {} exceeds 1/L_g = {}",
                self.t, t_max
            )));
        }
        if !(self.eps_stop > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps_stop must be positive, got {}",
                self.eps_stop
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of one proximal-gradient application: `G_t(x)` and `h(G_t(x))`.
#[derive(Debug, Clone)]
pub(crate) struct PgPoint {
    pub x: ParamVector,
    pub h: f64,
}

pub(crate) fn check_finite(x: &ParamVector) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}

pub(crate) fn pg_eval<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &ParamVector,
    t: f64,
) -> Result<PgPoint> {
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    check_finite(x)?;
    let grad = problem.grad_g(x);
    if let Some(index) = grad.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    let (z, h) = problem.prox_h_with_value(&(x - grad * t), t)?;
    Ok(PgPoint { x: z, h })
}

/// The proximal-gradient map `G_t(x) = prox_{t h}(x - t grad_g(x))`.
pub fn pg_step<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &ParamVector,
    t: f64,
) -> Result<ParamVector> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("steplength must be positive, got {t}")));
    }
    pg_eval(problem, x, t).map(|p| p.x)
}

/// Fixed-point residual `f_t(x) = G_t(x) - x`.
pub fn residual<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &ParamVector,
    t: f64,
) -> Result<ParamVector> {
    Ok(pg_step(problem, x, t)? - x)
}

/// `phi(x) = g(x) + h(x)`; `+inf` outside the domain of `h`.
pub fn objective<P: CompositeProblem + ?Sized>(problem: &P, x: &ParamVector) -> f64 {
    let h = problem.eval_h(x);
    if h == f64::INFINITY {
        return h;
    }
    problem.eval_g(x) + h
}

/// Stopping rule: `||r|| <= eps_stop`.
pub fn converged(r: &ParamVector, eps_stop: f64) -> bool {
    r.norm() <= eps_stop
}
