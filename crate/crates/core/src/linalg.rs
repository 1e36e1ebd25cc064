//! Dense kernels for Anderson-type extrapolation: the iterate/residual
//! difference window, ridge-regularised least squares, the damping root
//! solve and condition numbers.
//!
//! All three solves share one thin SVD of the residual-difference matrix
//! `F = U diag(d) V^T` ([`WindowSvd`]). With `u = U^T f`,
//! `gamma(lam) = V diag(d_i / (d_i^2 + lam)) u`, so once the SVD exists every
//! member of the ridge family costs `O(m^2)`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which `F` counts as rank deficient.
pub const RANK_TOL: f64 = 1e-12;
/// Cap on bisection steps in [`damping_solve`].
pub const DAMPING_MAX_BISECTIONS: usize = 200;

/// Sliding window of iterate differences `dx_i = x_{i+1} - x_i` and residual
/// differences `df_i = f_{i+1} - f_i`, oldest column first.
#[derive(Debug, Clone)]
pub struct AAWindow {
    capacity: usize,
    dx: VecDeque<DVector<f64>>,
    df: VecDeque<DVector<f64>>,
    prev: Option<(DVector<f64>, DVector<f64>)>,
}

impl AAWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            dx: VecDeque::with_capacity(capacity),
            df: VecDeque::with_capacity(capacity),
            prev: None,
        }
    }

    /// Records `(x, f(x))`. Appends a difference column when a previous point
    /// exists, dropping the oldest column past capacity.
    pub fn observe(&mut self, x: &DVector<f64>, f: &DVector<f64>) {
        if let Some((px, pf)) = self.prev.take() {
            if self.dx.len() == self.capacity {
                self.dx.pop_front();
                self.df.pop_front();
            }
            self.dx.push_back(x - px);
            self.df.push_back(f - pf);
        }
        self.prev = Some((x.clone(), f.clone()));
    }

    /// Drops every difference column but keeps the latest point, so the next
    /// observation starts a one-column window.
    pub fn clear_columns(&mut self) {
        self.dx.clear();
        self.df.clear();
    }

    /// Forgets all columns and the anchor point.
    pub fn restart(&mut self) {
        self.dx.clear();
        self.df.clear();
        self.prev = None;
    }

    /// Current order `m_k` (number of columns).
    pub fn order(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    /// `X_k`, the `p x m_k` matrix of iterate differences.
    pub fn x_matrix(&self) -> DMatrix<f64> {
        stack(&self.dx)
    }

    /// `F_k`, the `p x m_k` matrix of residual differences.
    pub fn f_matrix(&self) -> DMatrix<f64> {
        stack(&self.df)
    }

    /// `(X_k + F_k) gamma`.
    pub fn combine(&self, gamma: &DVector<f64>) -> DVector<f64> {
        let p = self.dx.front().map_or(0, |c| c.len());
        let mut out = DVector::zeros(p);
        for (j, (dx, df)) in self.dx.iter().zip(&self.df).enumerate() {
            out.axpy(gamma[j], dx, 1.0);
            out.axpy(gamma[j], df, 1.0);
        }
        out
    }
}

fn stack(cols: &VecDeque<DVector<f64>>) -> DMatrix<f64> {
    let p = cols.front().map_or(0, |c| c.len());
    DMatrix::from_fn(p, cols.len(), |i, j| cols[j][i])
}

/// Thin SVD of `F` together with `U^T f`.
#[derive(Debug, Clone)]
pub struct WindowSvd {
    d: DVector<f64>,
    v: DMatrix<f64>,
    ut_f: DVector<f64>,
}

impl WindowSvd {
    pub fn new(f_mat: &DMatrix<f64>, f: &DVector<f64>) -> Result<Self> {
        if f_mat.ncols() == 0 {
            return Err(Error::InvalidArgument("window has no columns".into()));
        }
        if f_mat.nrows() != f.len() {
            return Err(Error::DimensionMismatch {
                expected: f_mat.nrows(),
                got: f.len(),
            });
        }
        if f_mat.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(Error::SvdFailed);
        }
        // Exactly-zero rows change neither F^T F nor F^T f. Factoring without
        // them makes the result independent of how many such rows there are,
        // bit for bit, instead of merely up to cond(F) * eps.
        let nonzero: Vec<usize> = (0..f_mat.nrows())
            .filter(|&i| f_mat.row(i).iter().any(|v| *v != 0.0))
            .collect();
        let (f_mat, f) = if nonzero.is_empty() || nonzero.len() == f_mat.nrows() {
            (f_mat.clone(), f.clone())
        } else {
            (f_mat.select_rows(nonzero.iter()), f.select_rows(nonzero.iter()))
        };
        let svd = SVD::try_new(f_mat, true, true, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
        let u = svd.u.ok_or(Error::SvdFailed)?;
        let v = svd.v_t.ok_or(Error::SvdFailed)?.transpose();
        Ok(Self {
            ut_f: u.tr_mul(&f),
            d: svd.singular_values,
            v,
        })
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn d_max(&self) -> f64 {
        self.d.max()
    }

    /// Largest over smallest singular value; `1` for a single column and
    /// `+inf` when the smallest is zero.
    pub fn condition_number(&self) -> f64 {
        if self.d.len() == 1 {
            return 1.0;
        }
        let (lo, hi) = (self.d.min(), self.d.max());
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    fn rank_cutoff(&self) -> f64 {
        RANK_TOL * self.d_max()
    }

    /// Ridge solution `(F^T F + lam I)^{-1} F^T f`. With `lam = 0` the window
    /// must have full column rank.
    pub fn solve(&self, lam: f64) -> Result<DVector<f64>> {
        if !(lam >= 0.0) {
            return Err(Error::InvalidArgument(format!("ridge parameter must be >= 0, got {lam}")));
        }
        if lam == 0.0 {
            let (lo, hi) = (self.d.min(), self.d.max());
            if hi == 0.0 || lo <= self.rank_cutoff() {
                return Err(Error::Singular {
                    smallest: lo,
                    largest: hi,
                });
            }
        }
        let coef = DVector::from_fn(self.d.len(), |i, _| {
            let d = self.d[i];
            if d == 0.0 {
                0.0
            } else {
                d * self.ut_f[i] / (d * d + lam)
            }
        });
        Ok(&self.v * coef)
    }

    /// Squared norm of the ridge solution restricted to the numerically
    /// nonzero singular directions.
    fn ridge_norm_sq(&self, lam: f64, cutoff: f64) -> f64 {
        self.d
            .iter()
            .zip(self.ut_f.iter())
            .filter(|(d, _)| **d > cutoff)
            .map(|(&d, &u)| {
                let c = d * u / (d * d + lam);
                c * c
            })
            .sum()
    }

    fn ridge_restricted(&self, lam: f64, cutoff: f64) -> DVector<f64> {
        let coef = DVector::from_fn(self.d.len(), |i, _| {
            let d = self.d[i];
            if d > cutoff {
                d * self.ut_f[i] / (d * d + lam)
            } else {
                0.0
            }
        });
        &self.v * coef
    }

    /// Finds `lam* >= 0` with `||gamma(lam*)||^2 = delta ||gamma(0)||^2` and
    /// returns `(lam*, gamma(lam*))`.
    ///
    /// Directions with singular value below the rank cutoff are dropped from
    /// both sides, which makes `gamma(0)` the pseudo-inverse solution.
    pub fn damping(&self, delta: f64) -> Result<(f64, DVector<f64>)> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relative damping must lie in (0, 1], got {delta}"
            )));
        }
        let d_max = self.d_max();
        if d_max == 0.0 {
            return Ok((0.0, DVector::zeros(self.d.len())));
        }
        let cutoff = self.rank_cutoff();
        let full = self.ridge_norm_sq(0.0, cutoff);
        if full == 0.0 {
            return Ok((0.0, DVector::zeros(self.d.len())));
        }
        if delta == 1.0 {
            return Ok((0.0, self.ridge_restricted(0.0, cutoff)));
        }
        let target = delta * full;
        let floor = 1e-16 * d_max * d_max;
        let mut lo = floor.ln();
        let mut hi = (1e16 * d_max * d_max).ln();
        if self.ridge_norm_sq(floor, cutoff) <= target {
            return Ok((floor, self.ridge_restricted(floor, cutoff)));
        }
        let mut lam = floor;
        for _ in 0..DAMPING_MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            lam = mid.exp();
            let norm = self.ridge_norm_sq(lam, cutoff);
            if (norm - target).abs() <= 1e-13 * target || hi - lo <= 1e-15 {
                break;
            }
            if norm > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lam, self.ridge_restricted(lam, cutoff)))
    }
}

/// Ridge-regularised least squares `(F^T F + lam I) gamma = F^T f` via SVD.
pub fn reg_ls_solve(f_mat: &DMatrix<f64>, f: &DVector<f64>, lam: f64) -> Result<DVector<f64>> {
    WindowSvd::new(f_mat, f)?.solve(lam)
}

/// Damping root solve; see [`WindowSvd::damping`].
pub fn damping_solve(f_mat: &DMatrix<f64>, f: &DVector<f64>, delta: f64) -> Result<(f64, DVector<f64>)> {
    WindowSvd::new(f_mat, f)?.damping(delta)
}

/// Ratio of extreme singular values of `F`; `1` for a single column.
pub fn condition_number(f_mat: &DMatrix<f64>) -> f64 {
    if f_mat.ncols() <= 1 {
        return 1.0;
    }
    match SVD::try_new(f_mat.clone(), false, false, f64::EPSILON, 0) {
        Some(svd) => {
            let (lo, hi) = (svd.singular_values.min(), svd.singular_values.max());
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rows_do_not_change_the_solution_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (compact, f) = random_window(&mut rng, 7, 4);
        // interleave zero rows of F; f may be anything there
        let padded = DMatrix::from_fn(14, 4, |i, j| if i % 2 == 1 { compact[(i / 2, j)] } else { 0.0 });
        let f_padded = DVector::from_fn(14, |i, _| if i % 2 == 1 { f[i / 2] } else { 3.0 });
        for lam in [0.0, 0.3] {
            assert_eq!(reg_ls_solve(&compact, &f, lam).unwrap(), reg_ls_solve(&padded, &f_padded, lam).unwrap());
        }
        assert_eq!(damping_solve(&compact, &f, 0.2).unwrap(), damping_solve(&padded, &f_padded, 0.2).unwrap());
    }

    fn random_window(rng: &mut ChaCha8Rng, p: usize, m: usize) -> (DMatrix<f64>, DVector<f64>) {
        let f_mat = DMatrix::from_fn(p, m, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let f = DVector::from_fn(p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        (f_mat, f)
    }

    /// Normal-equation residual of a ridge solution, computed without the SVD.
    fn normal_residual(f_mat: &DMatrix<f64>, f: &DVector<f64>, lam: f64, g: &DVector<f64>) -> f64 {
        let m = f_mat.ncols();
        let lhs = (f_mat.tr_mul(f_mat) + DMatrix::identity(m, m) * lam) * g;
        (lhs - f_mat.tr_mul(f)).norm()
    }

    #[test]
    fn orthonormal_columns_project() {
        let f_mat = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let f = DVector::from_vec(vec![2.0, -3.0, 5.0]);
        let g = reg_ls_solve(&f_mat, &f, 0.0).unwrap();
        assert!((g - f_mat.tr_mul(&f)).norm() < 1e-14);
        assert_eq!(condition_number(&f_mat), 1.0);
    }

    #[test]
    fn scalar_ridge() {
        let f_mat = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let f = DVector::from_vec(vec![2.0, 0.0]);
        let g = reg_ls_solve(&f_mat, &f, 1.0).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heavy_ridge_shrinks_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (f_mat, f) = random_window(&mut rng, 8, 3);
        let g = reg_ls_solve(&f_mat, &f, 1e12).unwrap();
        assert!(g.norm() <= 1e-9 * f_mat.tr_mul(&f).norm());
    }

    #[test]
    fn rank_deficient_unregularised_is_singular() {
        let f_mat = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0]);
        let f = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        assert!(matches!(reg_ls_solve(&f_mat, &f, 0.0), Err(Error::Singular { .. })));
        assert!(reg_ls_solve(&f_mat, &f, 1e-3).is_ok());
        assert_eq!(condition_number(&f_mat), f64::INFINITY);
    }

    #[test]
    fn condition_number_of_scaled_columns() {
        let f_mat = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((condition_number(&f_mat) - 2.0).abs() < 1e-14);
        let single = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 0.0]);
        assert_eq!(condition_number(&single), 1.0);
    }

    #[test]
    fn damping_examples() {
        let f_mat = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let f = DVector::from_vec(vec![2.0, 0.0]);
        let (lam, g) = damping_solve(&f_mat, &f, 1.0).unwrap();
        assert_eq!(lam, 0.0);
        assert!((g[0] - 2.0).abs() < 1e-15);

        // ||2 / (1 + lam)||^2 = 0.25 * 4  =>  lam = 1
        let (lam, g) = damping_solve(&f_mat, &f, 0.25).unwrap();
        assert!((lam - 1.0).abs() < 1e-8, "{lam}");
        assert!((g[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn damping_with_zero_least_squares_direction() {
        let f_mat = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let f = DVector::from_vec(vec![0.0, 3.0]);
        let (lam, g) = damping_solve(&f_mat, &f, 0.5).unwrap();
        assert_eq!(lam, 0.0);
        assert_eq!(g, DVector::zeros(1));
    }

    #[test]
    fn damping_rejects_bad_delta() {
        let f_mat = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let f = DVector::from_vec(vec![1.0, 0.0]);
        assert!(damping_solve(&f_mat, &f, 0.0).is_err());
        assert!(damping_solve(&f_mat, &f, 1.5).is_err());
    }

    #[test]
    fn damping_on_random_window_solves_defining_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (f_mat, f) = random_window(&mut rng, 6, 3);
        let (lam, g) = damping_solve(&f_mat, &f, 0.5).unwrap();
        // re-derive both sides through the ridge solver
        let ls = reg_ls_solve(&f_mat, &f, 0.0).unwrap().norm_squared();
        let again = reg_ls_solve(&f_mat, &f, lam).unwrap();
        assert!((again.norm_squared() - 0.5 * ls).abs() <= 1e-8 * 0.5 * ls);
        assert!((again - g).norm() < 1e-12);
    }

    #[test]
    fn window_columns_and_restart() {
        let mut w = AAWindow::new(2);
        let v = |a: f64| DVector::from_vec(vec![a, -a]);
        w.observe(&v(0.0), &v(1.0));
        assert!(w.is_empty());
        w.observe(&v(1.0), &v(3.0));
        w.observe(&v(3.0), &v(4.0));
        w.observe(&v(7.0), &v(4.5));
        assert_eq!(w.order(), 2);
        // oldest retained column is x_2 - x_1
        assert_eq!(w.x_matrix().column(0), v(2.0));
        assert_eq!(w.f_matrix().column(1), v(0.5));
        let g = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(w.combine(&g), (w.x_matrix() + w.f_matrix()) * &g);
        // clearing columns keeps the anchor: the next point adds one column
        w.clear_columns();
        assert_eq!(w.order(), 0);
        w.observe(&v(8.0), &v(5.0));
        assert_eq!(w.order(), 1);
        assert_eq!(w.x_matrix().column(0), v(1.0));
        w.restart();
        assert_eq!(w.order(), 0);
        w.observe(&v(0.0), &v(0.0));
        assert!(w.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ridge_satisfies_normal_equations(seed in 0u64..10_000, m in 1usize..6, log_lam in -8.0f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f_mat, f) = random_window(&mut rng, 12, m);
            let lam = 10f64.powf(log_lam);
            let g = reg_ls_solve(&f_mat, &f, lam).unwrap();
            let scale = f_mat.tr_mul(&f).norm() + 1.0;
            prop_assert!(normal_residual(&f_mat, &f, lam, &g) <= 1e-9 * scale);
        }

        #[test]
        fn ridge_norm_is_monotone(seed in 0u64..10_000, m in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f_mat, f) = random_window(&mut rng, 10, m);
            let svd = WindowSvd::new(&f_mat, &f).unwrap();
            let norms: Vec<f64> = (0..20)
                .map(|i| svd.solve(10f64.powf(-8.0 + 0.6 * i as f64)).unwrap().norm())
                .collect();
            for w in norms.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn damping_hits_target(seed in 0u64..10_000, m in 1usize..6,
                               delta in prop::sample::select(vec![0.01, 0.1, 0.5, 0.9, 1.0])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f_mat, f) = random_window(&mut rng, 9, m);
            let svd = WindowSvd::new(&f_mat, &f).unwrap();
            let ls = svd.solve(0.0).unwrap().norm_squared();
            let (lam, _) = svd.damping(delta).unwrap();
            let got = svd.solve(lam).unwrap().norm_squared();
            prop_assert!(lam >= 0.0);
            prop_assert!((got - delta * ls).abs() <= 1e-8 * delta * ls, "{} vs {}", got, delta * ls);
        }
    }
}
