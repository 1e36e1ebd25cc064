//! Seeded fixtures shared by the criterion benches.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use proxaccel::simgen::{gen_lasso_data, gen_qp, LassoSimSpec, QPSimSpec};
use proxaccel::{BoxQPProblem, LassoProblem};

/// Lasso instance with `lambda = frac * lambda_max`.
pub fn lasso(n: usize, p: usize, rho: f64, frac: f64, seed: u64) -> LassoProblem {
    let (x, y, _) = gen_lasso_data(&LassoSimSpec::new(n, p, rho, seed)).expect("valid lasso spec");
    let lambda = frac * LassoProblem::zero_solution_lambda(&x, &y);
    LassoProblem::new(x, y, lambda).expect("valid lasso instance")
}

pub fn box_qp(p: usize, cond: f64, seed: u64) -> BoxQPProblem {
    let (q_mat, q_vec) = gen_qp(&QPSimSpec::new(p, cond, seed)).expect("valid qp spec");
    BoxQPProblem::new(q_mat, q_vec).expect("valid qp instance")
}

/// Difference window `F` (p x m) and residual `f` with entries in [-1, 1].
pub fn window(p: usize, m: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = move || rng.random_range(-1.0..=1.0);
    let f_mat = DMatrix::from_fn(p, m, |_, _| next());
    let f = DVector::from_fn(p, |_, _| next());
    (f_mat, f)
}
