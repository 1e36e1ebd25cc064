use super::daarem::daarem_phase;
use super::nesterov::{nesterov_phase, NesterovMode};
use super::{DaaremConfig, PhaseEnd, RestartCriterion, RunReport, Tracker};
use crate::composite::{CompositeProblem, ParamVector, StepConfig};
use crate::error::{Error, Result};

/// Default cap on Nesterov iterations before handing over to DAAREM.
pub const DEFAULT_SWITCH_CAP: usize = 1000;

/// Nesterov momentum until `switch` fires or `n_s` iterations elapse, then
/// DAAREM from the last Nesterov iterate. Step and iteration budgets are shared.
pub fn run_nidaarem<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &ParamVector,
    cfg: StepConfig,
    dcfg: &DaaremConfig,
    switch: RestartCriterion,
    n_s: usize,
) -> Result<RunReport> {
    if n_s == 0 {
        return Err(Error::InvalidArgument("N_s must be >= 1".into()));
    }
    dcfg.validate()?;
    let mut tr = Tracker::new(problem, cfg, x0)?;
    let mode = NesterovMode::Switch { criterion: switch, cap: n_s };
    let end = match nesterov_phase(&mut tr, x0, mode)? {
        PhaseEnd::Switched(x, _) => daarem_phase(&mut tr, &x, dcfg)?,
        other => other,
    };
    Ok(match end {
        PhaseEnd::Converged(x, phi) => tr.finish(true, x, phi),
        PhaseEnd::Exhausted(x, phi) | PhaseEnd::Switched(x, phi) => {
            let phi = if phi.is_nan() { tr.phi(&x) } else { phi };
            tr.finish(false, x, phi)
        }
    })
}
