use nalgebra::{DMatrix, DVector};

use super::{check_matrix_finite, power_iteration_psd, LIPSCHITZ_INFLATION};
use crate::composite::{CompositeProblem, ParamVector};
use crate::error::{Error, Result};

/// `x^T Q x / 2 + q^T x` subject to `-1 <= x <= 1`.
#[derive(Debug, Clone)]
pub struct BoxQPProblem {
    q_mat: DMatrix<f64>,
    q_vec: DVector<f64>,
    lipschitz: f64,
}

/// Euclidean projection onto `[-1, 1]^p`.
pub fn box_project(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| x.clamp(-1.0, 1.0))
}

impl BoxQPProblem {
    /// `q_mat` must be symmetric positive definite.
    pub fn new(q_mat: DMatrix<f64>, q_vec: DVector<f64>) -> Result<Self> {
        if !q_mat.is_square() {
            return Err(Error::InvalidArgument(format!(
                "quadratic term must be square, got {}x{}",
                q_mat.nrows(),
                q_mat.ncols()
            )));
        }
        if q_mat.nrows() != q_vec.len() {
            return Err(Error::DimensionMismatch {
                expected: q_mat.nrows(),
                got: q_vec.len(),
            });
        }
        check_matrix_finite(&q_mat, "quadratic term")?;
        if q_vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("linear term has non-finite entries".into()));
        }
        let scale = q_mat.amax();
        if (&q_mat - q_mat.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("quadratic term is not symmetric".into()));
        }
        let lipschitz = power_iteration_psd(&q_mat) * LIPSCHITZ_INFLATION;
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidArgument("quadratic term is not positive definite".into()));
        }
        Ok(Self {
            q_mat,
            q_vec,
            lipschitz,
        })
    }

    pub fn quadratic(&self) -> &DMatrix<f64> {
        &self.q_mat
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.q_vec
    }
}

impl CompositeProblem for BoxQPProblem {
    fn dim(&self) -> usize {
        self.q_vec.len()
    }

    fn eval_g(&self, x: &ParamVector) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q_vec.dot(x)
    }

    fn grad_g(&self, x: &ParamVector) -> ParamVector {
        &self.q_mat * x + &self.q_vec
    }

    /// Exact feasibility test, no tolerance.
    fn eval_h(&self, x: &ParamVector) -> f64 {
        if x.iter().all(|v| (-1.0..=1.0).contains(v)) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox_h(&self, v: &ParamVector, _s: f64) -> Result<ParamVector> {
        Ok(box_project(v))
    }

    fn prox_h_with_value(&self, v: &ParamVector, _s: f64) -> Result<(ParamVector, f64)> {
        Ok((box_project(v), 0.0))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
