use nalgebra::{DMatrix, DVector};

use super::accept::{accept_objective, accept_residual, active_rows, cycle_accept, eps_schedule_step};
use super::{PhaseEnd, RunReport, StepKind, Tracker};
use crate::composite::{CompositeProblem, ParamVector, PgPoint, StepConfig};
use crate::error::{Error, Result};
use crate::linalg::{AAWindow, WindowSvd};

/// Acceptance rule for Anderson proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Monitor {
    /// `phi(y) <= phi(x) + eps` with a constant slack.
    Fixed,
    /// Slack flips between `eps` and `0` at every cycle boundary.
    #[default]
    Alternating,
    /// Residual-norm test; costs one extra proximal-gradient evaluation per
    /// proposal (reused as the next step when the proposal is accepted).
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaaremConfig {
    pub m: usize,
    pub alpha: f64,
    pub kappa: f64,
    /// Floor for the damping exponent: `s_k >= -d_floor`.
    pub d_floor: i64,
    pub rho_star: f64,
    pub eps: f64,
    pub monitor: Monitor,
    pub resid_rho: f64,
    pub resid_k: f64,
    pub resid_gamma: f64,
    pub eps_c: f64,
    pub subset_enabled: bool,
    pub subset_scale: f64,
}

impl Default for DaaremConfig {
    fn default() -> Self {
        Self {
            m: 10,
            alpha: 1.2,
            kappa: 25.0,
            d_floor: 50,
            rho_star: 1e8,
            eps: 1.0,
            monitor: Monitor::Alternating,
            resid_rho: 0.95,
            resid_k: 1.0,
            resid_gamma: 0.1,
            eps_c: 0.0,
            subset_enabled: false,
            subset_scale: 0.001,
        }
    }
}

impl DaaremConfig {
    pub fn with_monitor(mut self, monitor: Monitor) -> Self {
        self.monitor = monitor;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_subset(mut self, enabled: bool) -> Self {
        self.subset_enabled = enabled;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.m < 1 {
            return bad("m must be >= 1".into());
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must exceed 1, got {}", self.alpha));
        }
        if !self.kappa.is_finite() {
            return bad(format!("kappa must be finite, got {}", self.kappa));
        }
        if self.d_floor < 0 {
            return bad(format!("D must be >= 0, got {}", self.d_floor));
        }
        if !(self.rho_star > 0.0) {
            return bad(format!("rho_star must be positive, got {}", self.rho_star));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and >= 0, got {}", self.eps));
        }
        if !(0.0..1.0).contains(&self.resid_rho) {
            return bad(format!("resid_rho must lie in [0, 1), got {}", self.resid_rho));
        }
        if !(self.resid_gamma > 0.0) {
            return bad(format!("resid_gamma must be positive, got {}", self.resid_gamma));
        }
        if !(self.resid_k > 0.0) {
            return bad(format!("resid_K must be positive, got {}", self.resid_k));
        }
        if !(self.eps_c >= 0.0) {
            return bad(format!("eps_c must be >= 0, got {}", self.eps_c));
        }
        if !(self.subset_scale >= 0.0 && self.subset_scale.is_finite()) {
            return bad(format!("subset_scale must be finite and >= 0, got {}", self.subset_scale));
        }
        Ok(())
    }
}

/// `delta = 1 / (1 + alpha^(kappa - s))`.
pub fn damping_level(s_k: i64, alpha: f64, kappa: f64) -> f64 {
    1.0 / (1.0 + alpha.powf(kappa - s_k as f64))
}

/// Mutable DAAREM state.
#[derive(Debug, Clone)]
pub struct DaaremState {
    pub s_k: i64,
    /// Position inside the current cycle, `1..=m`.
    pub c_k: usize,
    pub eps_k: f64,
    /// Residual-monitor counterpart of `eps_k`: alternates between `rho` and 0.
    pub rho_k: f64,
    pub phi_star: f64,
    pub n_aa: usize,
    pub r0_norm: f64,
    /// Anderson iterations so far; drives the cycle arithmetic.
    pub k: usize,
    pub history: AAWindow,
}

impl DaaremState {
    pub fn new(dcfg: &DaaremConfig) -> Self {
        Self {
            s_k: 0,
            c_k: 1,
            eps_k: dcfg.eps,
            rho_k: dcfg.resid_rho,
            phi_star: f64::NAN,
            n_aa: 0,
            r0_norm: f64::NAN,
            k: 1,
            history: AAWindow::new(dcfg.m),
        }
    }

    /// Lowers the damping exponent by `by`, never below `-d_floor`.
    fn lower(&mut self, by: i64, d_floor: i64) {
        self.s_k = (self.s_k - by).max(-d_floor);
    }
}

/// Least-squares system, restricted to the active rows when subsetting.
fn window_system(f_mat: DMatrix<f64>, f: &DVector<f64>, dcfg: &DaaremConfig) -> (DMatrix<f64>, DVector<f64>) {
    if !dcfg.subset_enabled {
        return (f_mat, f.clone());
    }
    let rows = active_rows(&f_mat, dcfg.subset_scale);
    if rows.len() == f_mat.nrows() {
        return (f_mat, f.clone());
    }
    (f_mat.select_rows(rows.iter()), f.select_rows(rows.iter()))
}

pub(crate) fn daarem_phase<P: CompositeProblem + ?Sized>(
    tr: &mut Tracker<'_, P>,
    x0: &ParamVector,
    dcfg: &DaaremConfig,
) -> Result<PhaseEnd> {
    dcfg.validate()?;
    let m = dcfg.m;
    let mut st = DaaremState::new(dcfg);
    let mut x = x0.clone();
    let mut phi_x = f64::NAN;
    let mut cached: Option<PgPoint> = None;
    let mut started = false;
    loop {
        if tr.exhausted() {
            if phi_x.is_nan() {
                phi_x = tr.phi(&x);
            }
            return Ok(PhaseEnd::Exhausted(x, phi_x));
        }
        let gx = match cached.take() {
            Some(g) => g,
            None => tr.pg(&x)?,
        };
        let f = &gx.x - &x;
        let rn = f.norm();
        if st.r0_norm.is_nan() {
            st.r0_norm = rn;
        }
        if tr.is_converged(rn) {
            let phi = tr.phi_at(&gx);
            tr.record(phi, rn, StepKind::Pg);
            return Ok(PhaseEnd::Converged(gx.x, phi));
        }
        if !started {
            st.history.observe(&x, &f);
            let phi = tr.phi_at(&gx);
            st.phi_star = phi;
            tr.record(phi, rn, StepKind::Pg);
            x = gx.x;
            phi_x = phi;
            started = true;
            continue;
        }

        st.history.observe(&x, &f);
        let (f_sys, rhs) = window_system(st.history.f_matrix(), &f, dcfg);
        let svd = WindowSvd::new(&f_sys, &rhs)?;
        if svd.condition_number() > dcfg.rho_star {
            st.lower(1, dcfg.d_floor);
        }
        let delta = damping_level(st.s_k, dcfg.alpha, dcfg.kappa);
        let (_, gamma) = svd.damping(delta)?;
        let mut y = &x + &f;
        y -= st.history.combine(&gamma);

        let finite = y.iter().all(|v| v.is_finite());
        let mut phi_y = f64::NAN;
        let accepted = finite
            && match dcfg.monitor {
                Monitor::Fixed | Monitor::Alternating => {
                    phi_y = tr.phi(&y);
                    accept_objective(phi_y, phi_x, st.eps_k)
                }
                Monitor::Residual => {
                    let gy = tr.pg(&y)?;
                    let ry = (&gy.x - &y).norm();
                    let ok = accept_residual(
                        ry,
                        rn,
                        st.r0_norm,
                        st.rho_k,
                        st.k,
                        dcfg.resid_k,
                        dcfg.resid_gamma,
                        st.n_aa,
                    );
                    if ok {
                        phi_y = tr.phi(&y);
                        cached = Some(gy);
                    }
                    ok
                }
            };

        let (x_new, phi_new, kind) = if accepted {
            st.s_k += 1;
            st.n_aa += 1;
            tr.n_aa += 1;
            (y, phi_y, StepKind::AaAccepted)
        } else {
            let phi = tr.phi_at(&gx);
            (gx.x, phi, StepKind::AaRejected)
        };

        if st.k % m == 0 {
            if !cycle_accept(phi_new, st.phi_star, dcfg.eps_c) {
                st.lower(m as i64, dcfg.d_floor);
            }
            st.phi_star = phi_new;
            st.c_k = 1;
            st.history.clear_columns();
            match dcfg.monitor {
                Monitor::Alternating => st.eps_k = eps_schedule_step(st.eps_k, st.k, m, dcfg.eps),
                Monitor::Residual => st.rho_k = eps_schedule_step(st.rho_k, st.k, m, dcfg.resid_rho),
                Monitor::Fixed => {}
            }
        } else {
            st.c_k += 1;
        }
        st.k += 1;
        tr.record(phi_new, rn, kind);
        x = x_new;
        phi_x = phi_new;
    }
}

/// Damped Anderson acceleration with restarts and monotonicity monitoring.
///
/// Cycles mirror [`run_aa_restart`](super::run_aa_restart): after one plain
/// proximal-gradient step, cycles of `m` damped proposals use the
/// `1, 2, ..., m` most recent differences. A proposal `y = x + f - (X + F) gamma` uses ridge coefficients whose
/// norm is a fraction `delta_k` of the least-squares norm; accepted proposals
/// relax the damping, rejected ones fall back to `G_t(x)`.
pub fn run_daarem<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &ParamVector,
    cfg: StepConfig,
    dcfg: &DaaremConfig,
) -> Result<RunReport> {
    let mut tr = Tracker::new(problem, cfg, x0)?;
    Ok(match daarem_phase(&mut tr, x0, dcfg)? {
        PhaseEnd::Converged(x, phi) => tr.finish(true, x, phi),
        PhaseEnd::Exhausted(x, phi) | PhaseEnd::Switched(x, phi) => tr.finish(false, x, phi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::testing::HalfSquare;
    use crate::solvers::fixtures::{quadratic, small_lasso};
    use crate::solvers::{run_pgd, StepKind};

    #[test]
    fn damping_levels() {
        assert_eq!(damping_level(25, 1.2, 25.0), 0.5);
        let d = damping_level(-50, 1.2, 25.0);
        assert!((d - 1.0 / (1.0 + 1.2f64.powi(75))).abs() < 1e-20);
        assert!((d - 1.1518768e-6).abs() < 1e-13);
    }

    #[test]
    fn config_validation() {
        assert!(DaaremConfig::default().validate().is_ok());
        for bad in [
            DaaremConfig { m: 0, ..Default::default() },
            DaaremConfig { alpha: 1.0, ..Default::default() },
            DaaremConfig { eps: -1.0, ..Default::default() },
            DaaremConfig { resid_rho: 1.0, ..Default::default() },
            DaaremConfig { resid_gamma: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn fixed_zero_slack_is_monotone() {
        let prob = small_lasso(50, 120, 0.05, 13);
        let dcfg = DaaremConfig { eps: 0.0, monitor: Monitor::Fixed, ..Default::default() };
        let rep = run_daarem(&prob, &DVector::zeros(120), StepConfig::for_problem(&prob), &dcfg).unwrap();
        assert!(rep.converged);
        for w in rep.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12 * w[0].objective.abs().max(1.0));
        }
    }

    #[test]
    fn objective_monitors_use_one_step_per_iteration() {
        let prob = small_lasso(50, 120, 0.05, 13);
        for monitor in [Monitor::Fixed, Monitor::Alternating] {
            let dcfg = DaaremConfig::default().with_monitor(monitor);
            let rep = run_daarem(&prob, &DVector::zeros(120), StepConfig::for_problem(&prob), &dcfg).unwrap();
            assert_eq!(rep.pg_steps, rep.iterations);
        }
    }

    #[test]
    fn residual_monitor_step_accounting() {
        let prob = small_lasso(50, 120, 0.05, 13);
        let dcfg = DaaremConfig::default().with_monitor(Monitor::Residual);
        let rep = run_daarem(&prob, &DVector::zeros(120), StepConfig::for_problem(&prob), &dcfg).unwrap();
        assert!(rep.converged);
        // each proposal costs one extra evaluation, reused as the next step when accepted
        let proposals = rep
            .trace
            .iter()
            .filter(|r| matches!(r.step_kind, StepKind::AaAccepted | StepKind::AaRejected))
            .count();
        let accepted = rep.trace.iter().filter(|r| r.step_kind == StepKind::AaAccepted).count();
        let tail_reuse = usize::from(rep.trace.last().unwrap().step_kind == StepKind::AaAccepted);
        assert_eq!(rep.pg_steps, rep.iterations + proposals - accepted + tail_reuse);
    }

    #[test]
    fn agrees_with_pgd() {
        let prob = small_lasso(60, 90, 0.08, 17);
        let cfg = StepConfig::for_problem(&prob);
        let x0 = DVector::zeros(90);
        let pg = run_pgd(&prob, &x0, cfg).unwrap();
        for monitor in [Monitor::Fixed, Monitor::Alternating, Monitor::Residual] {
            for subset in [false, true] {
                let dcfg = DaaremConfig::default().with_monitor(monitor).with_subset(subset);
                let rep = run_daarem(&prob, &x0, cfg, &dcfg).unwrap();
                assert!(rep.converged, "{monitor:?} subset={subset}");
                assert!(((rep.final_obj - pg.final_obj) / pg.final_obj).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn order_one_converges() {
        let (prob, x_star) = quadratic(&[0.1, 1.0, 3.0], 4);
        let dcfg = DaaremConfig::default().with_m(1);
        let rep = run_daarem(&prob, &DVector::zeros(3), StepConfig::for_problem(&prob), &dcfg).unwrap();
        assert!(rep.converged);
        assert!((&rep.final_x - x_star).norm() < 1e-6);
    }

    #[test]
    fn zero_subset_scale_matches_full_when_rows_vanish() {
        // coordinates 3.. stay at zero: gradient there is identically zero
        let p = HalfSquare { dim: 6, boxed: false };
        let mut x0 = DVector::zeros(6);
        x0[0] = 2.0;
        x0[1] = -1.0;
        x0[2] = 0.5;
        let cfg = StepConfig::for_problem(&p).with_t(0.3);
        let full = DaaremConfig::default().with_m(3);
        let sub = DaaremConfig { subset_enabled: true, subset_scale: 0.0, ..full.clone() };
        let a = run_daarem(&p, &x0, cfg, &full).unwrap();
        let b = run_daarem(&p, &x0, cfg, &sub).unwrap();
        assert_eq!(a.iterations, b.iterations);
        for (ra, rb) in a.trace.iter().zip(&b.trace) {
            assert!((ra.objective - rb.objective).abs() <= 1e-12);
        }
        assert!((&a.final_x - &b.final_x).amax() <= 1e-12);
    }

    #[test]
    fn state_bounds() {
        let mut st = DaaremState::new(&DaaremConfig::default());
        st.lower(100, 50);
        assert_eq!(st.s_k, -50);
        st.lower(1, 50);
        assert_eq!(st.s_k, -50);
    }
}
