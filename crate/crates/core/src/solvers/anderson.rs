use nalgebra::DVector;

use super::{RunReport, StepKind, Tracker};
use crate::composite::{CompositeProblem, ParamVector, StepConfig};
use crate::error::{Error, Result};
use crate::linalg::{AAWindow, WindowSvd};

/// Ridge added when the unregularised window system is singular, relative to
/// the squared largest singular value.
const SINGULAR_FALLBACK: f64 = 1e-10;

/// Unregularised Anderson coefficients, falling back to a tiny ridge when the
/// window is rank deficient and to zero when it vanishes.
pub(crate) fn plain_coefficients(svd: &WindowSvd) -> Result<DVector<f64>> {
    match svd.solve(0.0) {
        Ok(g) => Ok(g),
        Err(Error::Singular { largest, .. }) if largest == 0.0 => Ok(DVector::zeros(svd.singular_values().len())),
        Err(Error::Singular { largest, .. }) => svd.solve(SINGULAR_FALLBACK * largest * largest),
        Err(e) => Err(e),
    }
}

/// Anderson acceleration with systematic restarts.
///
/// The first iteration is a plain proximal-gradient step; every later one is
/// an extrapolation from the `min(m, c_k)` most recent differences, where the
/// cycle position `c_k` returns to 1 after every `m` extrapolations. Every
/// extrapolation is taken; nothing is monitored.
pub fn run_aa_restart<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &ParamVector,
    cfg: StepConfig,
    m: usize,
) -> Result<RunReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("window order m must be >= 1".into()));
    }
    let mut tr = Tracker::new(problem, cfg, x0)?;
    let mut window = AAWindow::new(m);
    let mut x = x0.clone();
    let mut phi = f64::NAN;
    let mut k_aa = 0usize;
    let mut started = false;
    while !tr.exhausted() {
        let g = tr.pg(&x)?;
        let f = &g.x - &x;
        let rn = f.norm();
        if tr.is_converged(rn) || !started {
            phi = tr.phi_at(&g);
            tr.record(phi, rn, StepKind::Pg);
            if tr.is_converged(rn) {
                return Ok(tr.finish(true, g.x, phi));
            }
            window.observe(&x, &f);
            x = g.x;
            started = true;
            continue;
        }
        window.observe(&x, &f);
        let svd = WindowSvd::new(&window.f_matrix(), &f)?;
        let gamma = plain_coefficients(&svd)?;
        let mut next = &x + &f;
        next -= window.combine(&gamma);
        k_aa += 1;
        tr.n_aa += 1;
        if k_aa % m == 0 {
            window.clear_columns();
        }
        phi = tr.phi(&next);
        tr.record(phi, rn, StepKind::AaAccepted);
        x = next;
    }
    if phi.is_nan() {
        phi = tr.phi(&x);
    }
    Ok(tr.finish(false, x, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::pg_step;
    use crate::solvers::fixtures::{quadratic, small_lasso};
    use crate::solvers::run_pgd;
    use nalgebra::DMatrix;

    #[test]
    fn order_one_closed_form() {
        let (prob, _) = quadratic(&[0.5, 2.0, 4.0], 3);
        let t = 1.0 / prob.lipschitz();
        let x0 = DVector::from_row_slice(&[1.0, -0.5, 0.25]);
        let x1 = pg_step(&prob, &x0, t).unwrap();
        let f0 = &x1 - &x0;
        let g1 = pg_step(&prob, &x1, t).unwrap();
        let f1 = &g1 - &x1;
        let (dx, df) = (&x1 - &x0, &f1 - &f0);
        let gamma = df.dot(&f1) / df.norm_squared();
        let expected = &x1 + &f1 - (&dx + &df) * gamma;

        let cfg = StepConfig::for_problem(&prob).with_t(t).with_max_iter(2);
        let rep = run_aa_restart(&prob, &x0, cfg, 1).unwrap();
        assert!((&rep.final_x - &expected).norm() < 1e-13);
        assert_eq!(rep.trace[1].step_kind, StepKind::AaAccepted);
    }

    #[test]
    fn linear_map_solved_within_one_cycle() {
        let d = 5;
        let (prob, x_star) = quadratic(&[0.3, 0.7, 1.1, 1.6, 2.0], 21);
        let x0 = DVector::zeros(d);
        let cfg = StepConfig::for_problem(&prob);
        let rep = run_aa_restart(&prob, &x0, cfg, d).unwrap();
        assert!(rep.converged);
        // one pg step, d extrapolations, then the confirming step
        assert!(rep.pg_steps <= d + 2, "pg_steps = {}", rep.pg_steps);
        assert!((&rep.final_x - x_star).norm() < 1e-8);
    }

    #[test]
    fn orthogonal_residual_gives_pg_step() {
        let f_mat = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let f = DVector::from_row_slice(&[0.0, 3.0]);
        let svd = WindowSvd::new(&f_mat, &f).unwrap();
        assert_eq!(plain_coefficients(&svd).unwrap(), DVector::zeros(1));
    }

    #[test]
    fn singular_window_falls_back() {
        let f_mat = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        let f = DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let svd = WindowSvd::new(&f_mat, &f).unwrap();
        let g = plain_coefficients(&svd).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
        let zero = WindowSvd::new(&DMatrix::zeros(3, 2), &f).unwrap();
        assert_eq!(plain_coefficients(&zero).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn converges_on_lasso() {
        let prob = small_lasso(40, 80, 0.1, 9);
        let cfg = StepConfig::for_problem(&prob);
        let x0 = DVector::zeros(80);
        let aa = run_aa_restart(&prob, &x0, cfg, 5).unwrap();
        let pg = run_pgd(&prob, &x0, cfg).unwrap();
        assert!(aa.converged);
        assert!(((aa.final_obj - pg.final_obj) / pg.final_obj).abs() < 1e-6);
    }

    #[test]
    fn zero_order_rejected() {
        let (prob, _) = quadratic(&[1.0], 1);
        assert!(run_aa_restart(&prob, &DVector::zeros(1), StepConfig::for_problem(&prob), 0).is_err());
    }
}
