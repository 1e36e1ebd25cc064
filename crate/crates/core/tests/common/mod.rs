#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proxaccel::problems::{BoxQPProblem, LassoProblem, LogisticProblem, MatrixCompletionProblem};
use proxaccel::simgen::{gen_lasso_data, gen_logistic_data, gen_mc_data, gen_qp, LassoSimSpec, McSimSpec, QPSimSpec};

pub fn lasso(n: usize, p: usize, frac: f64, seed: u64) -> LassoProblem {
    let (x, y, _) = gen_lasso_data(&LassoSimSpec::new(n, p, 0.5, seed)).unwrap();
    let lam = frac * LassoProblem::zero_solution_lambda(&x, &y);
    LassoProblem::new(x, y, lam).unwrap()
}

pub fn logistic(n: usize, p: usize, frac: f64, seed: u64) -> LogisticProblem {
    let (x, y, _) = gen_logistic_data(&LassoSimSpec::new(n, p, 0.3, seed)).unwrap();
    let lam = frac * LogisticProblem::zero_solution_lambda(&x, &y);
    LogisticProblem::new(x, y, lam).unwrap()
}

pub fn completion(n: usize, p: usize, frac: f64, seed: u64) -> MatrixCompletionProblem {
    let spec = McSimSpec { observed_frac: 0.4, ..McSimSpec::new(n, p, seed) };
    let prob = MatrixCompletionProblem::new(n, p, gen_mc_data(&spec).unwrap(), 0.0).unwrap();
    let lam = frac * prob.zero_solution_lambda().unwrap();
    prob.with_lambda(lam).unwrap()
}

pub fn box_qp(p: usize, cond: f64, seed: u64) -> BoxQPProblem {
    let (q, lin) = gen_qp(&QPSimSpec::new(p, cond, seed)).unwrap();
    BoxQPProblem::new(q, lin).unwrap()
}

/// Strongly convex quadratic `x^T Q x / 2 + q^T x` whose minimiser sits well
/// inside the box, so the constraint never binds at the optimum.
pub fn interior_quadratic(eigs: &[f64], seed: u64) -> (BoxQPProblem, DVector<f64>) {
    use rand::{Rng, SeedableRng};
    let p = eigs.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(p, p, |_, _| rng.random::<f64>() - 0.5);
    let u = b.qr().q();
    let q = &u * DMatrix::from_diagonal(&DVector::from_row_slice(eigs)) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let x_star = DVector::from_fn(p, |_, _| rng.random::<f64>() * 0.8 - 0.4);
    let lin = -(&q * &x_star);
    (BoxQPProblem::new(q, lin).unwrap(), x_star)
}
