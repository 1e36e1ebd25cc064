//! Concrete composite problems: lasso, l1-logistic regression, nuclear-norm
//! matrix completion and box-constrained quadratic programming.

mod box_qp;
mod lasso;
mod logistic;
mod matrix_completion;

pub use box_qp::{box_project, BoxQPProblem};
pub use lasso::LassoProblem;
pub use logistic::{logistic_gradient, LogisticProblem};
pub use matrix_completion::{mc_gradient, svd_soft_threshold, MatrixCompletionProblem};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance of the power iteration used for Lipschitz constants.
pub const POWER_ITER_TOL: f64 = 1e-10;
/// Iteration cap of the power iteration.
pub const POWER_ITER_MAX: usize = 5000;
/// Inflation applied to the power-iteration eigenvalue so the cached
/// Lipschitz constant bounds the true one from above.
pub const LIPSCHITZ_INFLATION: f64 = 1.0 + 1e-6;

/// Elementwise `sign(v_j) * (|v_j| - s)_+`.
pub fn soft_threshold(v: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "soft-threshold level must be non-negative, got {s}"
        )));
    }
    Ok(v.map(|x| soft_threshold_scalar(x, s)))
}

#[inline]
pub(crate) fn soft_threshold_scalar(x: f64, s: f64) -> f64 {
    if x > s {
        x - s
    } else if x < -s {
        x + s
    } else {
        0.0
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration. Returns the Rayleigh quotient at convergence (a lower bound).
pub(crate) fn power_iteration_psd(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // fixed, slightly uneven start so it is never orthogonal to the top
    // eigenvector for structured inputs
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() / n as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let w = a * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= POWER_ITER_TOL * next.abs() {
            return next.max(lambda);
        }
        lambda = next;
    }
    lambda
}

/// Certified upper bound on `lambda_max(X^T X)`, computed on the smaller Gram
/// matrix (`X^T X` and `X X^T` share their nonzero spectrum).
pub(crate) fn gram_lambda_max(x: &DMatrix<f64>) -> f64 {
    let gram = if x.ncols() <= x.nrows() {
        x.tr_mul(x)
    } else {
        x * x.transpose()
    };
    power_iteration_psd(&gram) * LIPSCHITZ_INFLATION
}

pub(crate) fn check_matrix_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} has non-finite entries")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn soft_threshold_examples() {
        let v = DVector::from_vec(vec![3.0, -0.5, 1.0]);
        assert_eq!(soft_threshold(&v, 1.0).unwrap().as_slice(), &[2.0, 0.0, 0.0]);
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v);
        let w = DVector::from_vec(vec![-2.5]);
        assert_eq!(soft_threshold(&w, 1.5).unwrap()[0], -1.0);
        assert!(soft_threshold(&v, -0.1).is_err());
    }

    #[test]
    fn power_iteration_matches_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, p) in &[(30, 8), (8, 30), (20, 20)] {
            let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
            let exact = SymmetricEigen::new(x.tr_mul(&x)).eigenvalues.max();
            let bound = gram_lambda_max(&x);
            assert!(bound >= exact, "{bound} < {exact}");
            assert!(bound <= exact * (1.0 + 2e-6), "{bound} vs {exact}");
        }
    }

    #[test]
    fn power_iteration_of_zero_matrix() {
        assert_eq!(power_iteration_psd(&DMatrix::zeros(3, 3)), 0.0);
    }
}
