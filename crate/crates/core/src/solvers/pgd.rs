use super::{RunReport, StepKind, Tracker};
use crate::composite::{CompositeProblem, ParamVector, StepConfig};
use crate::error::Result;

/// Plain proximal gradient descent `x_{k+1} = G_t(x_k)`.
pub fn run_pgd<P: CompositeProblem + ?Sized>(problem: &P, x0: &ParamVector, cfg: StepConfig) -> Result<RunReport> {
    let mut tr = Tracker::new(problem, cfg, x0)?;
    let mut x = x0.clone();
    let mut phi = f64::NAN;
    while !tr.exhausted() {
        let g = tr.pg(&x)?;
        let rn = (&g.x - &x).norm();
        phi = tr.phi_at(&g);
        tr.record(phi, rn, StepKind::Pg);
        x = g.x;
        if tr.is_converged(rn) {
            return Ok(tr.finish(true, x, phi));
        }
    }
    Ok(tr.finish(false, x, phi))
}
