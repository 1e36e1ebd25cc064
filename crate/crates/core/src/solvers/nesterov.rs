use super::{PhaseEnd, RunReport, StepKind, Tracker};
use crate::composite::{CompositeProblem, ParamVector, StepConfig};
use crate::error::Result;

/// `a_{k+1} = (1 + sqrt(1 + 4 a_k^2)) / 2`.
pub fn momentum_next(a: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * a * a).sqrt())
}

/// Test used to clear momentum (restarts) or to leave the Nesterov phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartCriterion {
    /// Fires when `phi(x_k) > phi(x_{k-1})`.
    Monotonicity,
    /// Fires when `(y_k - x_k)^T (x_k - x_{k-1}) > 0`; needs no objective.
    Gradient,
}

/// Momentum scalar and the two vectors carried between iterations.
#[derive(Debug, Clone)]
pub struct NesterovState {
    pub a_k: f64,
    pub x_prev: ParamVector,
    pub y_k: ParamVector,
}

impl NesterovState {
    pub fn new(x0: &ParamVector) -> Self {
        Self {
            a_k: 1.0,
            x_prev: x0.clone(),
            y_k: x0.clone(),
        }
    }

    /// Moves to `y_{k+1} = x_k + ((a_k - 1) / a_{k+1}) (x_k - x_{k-1})`.
    pub fn advance(&mut self, x_k: ParamVector) {
        let a_next = momentum_next(self.a_k);
        let w = (self.a_k - 1.0) / a_next;
        let mut y = &x_k * (1.0 + w);
        y.axpy(-w, &self.x_prev, 1.0);
        self.y_k = y;
        self.x_prev = x_k;
        self.a_k = a_next;
    }

    /// Clears momentum: `a_{k+1} = 1`, `y_{k+1} = x_k`.
    pub fn restart(&mut self, x_k: ParamVector) {
        self.a_k = 1.0;
        self.y_k = x_k.clone();
        self.x_prev = x_k;
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum NesterovMode {
    Plain,
    Restart(RestartCriterion),
    Switch { criterion: RestartCriterion, cap: usize },
}

impl NesterovMode {
    fn criterion(self) -> Option<RestartCriterion> {
        match self {
            NesterovMode::Plain => None,
            NesterovMode::Restart(c) | NesterovMode::Switch { criterion: c, .. } => Some(c),
        }
    }
}

pub(crate) fn nesterov_phase<P: CompositeProblem + ?Sized>(
    tr: &mut Tracker<'_, P>,
    x0: &ParamVector,
    mode: NesterovMode,
) -> Result<PhaseEnd> {
    let mut st = NesterovState::new(x0);
    let needs_phi0 = mode.criterion() == Some(RestartCriterion::Monotonicity);
    let mut phi_prev = if needs_phi0 { tr.phi(x0) } else { f64::NAN };
    let mut k = 0usize;
    loop {
        if tr.exhausted() {
            return Ok(PhaseEnd::Exhausted(st.x_prev, phi_prev));
        }
        k += 1;
        let g = tr.pg(&st.y_k)?;
        let phi = tr.phi_at(&g);
        let x = g.x;
        let rn = (&x - &st.y_k).norm();
        if tr.is_converged(rn) {
            tr.record(phi, rn, StepKind::Nesterov);
            return Ok(PhaseEnd::Converged(x, phi));
        }
        let fired = match mode.criterion() {
            None => false,
            Some(RestartCriterion::Monotonicity) => phi > phi_prev,
            Some(RestartCriterion::Gradient) => (&st.y_k - &x).dot(&(&x - &st.x_prev)) > 0.0,
        };
        match mode {
            NesterovMode::Switch { cap, .. } if fired || k >= cap => {
                tr.record(phi, rn, StepKind::Switch);
                tr.switch_iter = Some(tr.iterations);
                return Ok(PhaseEnd::Switched(x, phi));
            }
            NesterovMode::Restart(_) if fired => {
                tr.record(phi, rn, StepKind::Restart);
                st.restart(x);
            }
            _ => {
                tr.record(phi, rn, StepKind::Nesterov);
                st.advance(x);
            }
        }
        phi_prev = phi;
    }
}

fn finish<P: CompositeProblem + ?Sized>(tr: Tracker<'_, P>, end: PhaseEnd) -> RunReport {
    match end {
        PhaseEnd::Converged(x, phi) => tr.finish(true, x, phi),
        PhaseEnd::Exhausted(x, phi) | PhaseEnd::Switched(x, phi) => {
            let phi = if phi.is_nan() { tr.phi(&x) } else { phi };
            tr.finish(false, x, phi)
        }
    }
}

/// Nesterov/FISTA momentum on the proximal-gradient map. Convergence is
/// judged on `||G_t(y_k) - y_k||`, the residual of the point actually mapped.
pub fn run_nesterov<P: CompositeProblem + ?Sized>(problem: &P, x0: &ParamVector, cfg: StepConfig) -> Result<RunReport> {
    let mut tr = Tracker::new(problem, cfg, x0)?;
    let end = nesterov_phase(&mut tr, x0, NesterovMode::Plain)?;
    Ok(finish(tr, end))
}

/// Nesterov with momentum cleared whenever `criterion` fires.
pub fn run_nesterov_restart<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &ParamVector,
    cfg: StepConfig,
    criterion: RestartCriterion,
) -> Result<RunReport> {
    let mut tr = Tracker::new(problem, cfg, x0)?;
    let end = nesterov_phase(&mut tr, x0, NesterovMode::Restart(criterion))?;
    Ok(finish(tr, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::pg_step;
    use crate::solvers::fixtures::{quadratic, small_lasso};
    use crate::solvers::run_pgd;
    use nalgebra::DVector;

    #[test]
    fn momentum_weights() {
        let a2 = momentum_next(1.0);
        let a3 = momentum_next(a2);
        assert!((a2 - 1.6180339887).abs() < 1e-10);
        assert!((a3 - 2.1935270853).abs() < 1e-10);
        let mut a = 1.0;
        for _ in 0..100 {
            let b = momentum_next(a);
            assert!(b > a);
            a = b;
        }
    }

    #[test]
    fn first_step_has_no_momentum() {
        let (prob, _) = quadratic(&[1.0, 3.0, 10.0], 1);
        let x0 = DVector::from_row_slice(&[1.0, -1.0, 0.5]);
        let t = 1.0 / prob.lipschitz();
        let x1 = pg_step(&prob, &x0, t).unwrap();
        let mut st = NesterovState::new(&x0);
        st.advance(x1.clone());
        assert_eq!(st.y_k, x1);
        assert_eq!(st.x_prev, x1);
    }

    #[test]
    fn beats_pgd_on_strongly_convex_quadratic() {
        let (prob, x_star) = quadratic(&[0.01, 0.1, 0.5, 1.0, 2.0, 5.0], 7);
        let x0 = DVector::zeros(6);
        let cfg = StepConfig::for_problem(&prob);
        let nes = run_nesterov(&prob, &x0, cfg).unwrap();
        let pgd = run_pgd(&prob, &x0, cfg).unwrap();
        assert!(nes.converged && pgd.converged);
        assert!(nes.pg_steps < pgd.pg_steps, "{} vs {}", nes.pg_steps, pgd.pg_steps);
        assert!((&nes.final_x - &x_star).norm() < 1e-5);
        assert_eq!(nes.pg_steps, nes.iterations);
    }

    #[test]
    fn restart_helps_ill_conditioned_quadratic() {
        let (prob, _) = quadratic(&[1.0, 1e4], 2);
        let x0 = DVector::zeros(2);
        let cfg = StepConfig::for_problem(&prob);
        let plain = run_nesterov(&prob, &x0, cfg).unwrap();
        for c in [RestartCriterion::Monotonicity, RestartCriterion::Gradient] {
            let rs = run_nesterov_restart(&prob, &x0, cfg, c).unwrap();
            assert!(rs.converged);
            assert!(rs.pg_steps < plain.pg_steps, "{c:?}: {} vs {}", rs.pg_steps, plain.pg_steps);
        }
    }

    #[test]
    fn restart_fires_on_first_increase_and_clears_momentum() {
        let (prob, _) = quadratic(&[1.0, 1e4], 11);
        let x0 = DVector::from_row_slice(&[0.9, -0.7]);
        let cfg = StepConfig::for_problem(&prob);
        let rs = run_nesterov_restart(&prob, &x0, cfg, RestartCriterion::Monotonicity).unwrap();
        let plain = run_nesterov(&prob, &x0, cfg).unwrap();
        let k = rs.trace.iter().position(|r| r.step_kind == StepKind::Restart).expect("a restart");
        // identical up to the first violation, which is where plain momentum first increases phi
        let first_up = plain.trace.windows(2).position(|w| w[1].objective > w[0].objective).unwrap() + 1;
        assert_eq!(k, first_up);
        for i in 0..=k {
            assert_eq!(rs.trace[i].objective, plain.trace[i].objective);
        }
        // after a restart the next step is a plain pg step from x_k
        let mut st = NesterovState::new(&x0);
        st.advance(x0.clone());
        st.restart(x0.clone());
        assert_eq!(st.a_k, 1.0);
        assert_eq!(st.y_k, x0);
    }

    #[test]
    fn restart_segment_minima_non_increasing() {
        let prob = small_lasso(30, 60, 0.05, 5);
        let cfg = StepConfig::for_problem(&prob);
        let rs = run_nesterov_restart(&prob, &DVector::zeros(60), cfg, RestartCriterion::Monotonicity).unwrap();
        assert!(rs.converged);
        let mut minima = Vec::new();
        let mut cur = f64::INFINITY;
        for r in &rs.trace {
            cur = cur.min(r.objective);
            if r.step_kind == StepKind::Restart {
                minima.push(cur);
            }
        }
        minima.push(cur);
        for w in minima.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn monotone_run_matches_plain() {
        let (prob, _) = quadratic(&[1.0, 1.0, 1.0], 2);
        let x0 = DVector::from_row_slice(&[0.3, 0.1, -0.2]);
        let cfg = StepConfig::for_problem(&prob);
        let plain = run_nesterov(&prob, &x0, cfg).unwrap();
        let rs = run_nesterov_restart(&prob, &x0, cfg, RestartCriterion::Monotonicity).unwrap();
        assert_eq!(plain.trace, rs.trace);
        assert_eq!(plain.final_x, rs.final_x);
    }
}
