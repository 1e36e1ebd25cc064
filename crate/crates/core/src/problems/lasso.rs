use nalgebra::{DMatrix, DVector};

use super::{check_matrix_finite, gram_lambda_max, soft_threshold_scalar};
use crate::composite::{CompositeProblem, ParamVector};
use crate::error::{Error, Result};

/// `||y - X b||^2 / 2 + lambda * ||b||_1`.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    lambda: f64,
    lipschitz: f64,
}

impl LassoProblem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
        }
        check_matrix_finite(&x, "design matrix")?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("response has non-finite entries".into()));
        }
        let lipschitz = gram_lambda_max(&x);
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidArgument("design matrix is identically zero".into()));
        }
        Ok(Self { x, y, lambda, lipschitz })
    }

    /// Same data, different penalty; the cached Lipschitz constant is reused.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    /// Smallest penalty with an all-zero solution: `||X^T y||_inf`.
    pub fn zero_solution_lambda(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        x.tr_mul(y).amax()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `X^T (y - X b)`, the negative gradient.
    pub fn correlation(&self, b: &ParamVector) -> DVector<f64> {
        let r = &self.y - &self.x * b;
        self.x.tr_mul(&r)
    }
}

impl CompositeProblem for LassoProblem {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn eval_g(&self, b: &ParamVector) -> f64 {
        0.5 * (&self.y - &self.x * b).norm_squared()
    }

    fn grad_g(&self, b: &ParamVector) -> ParamVector {
        -self.correlation(b)
    }

    fn eval_h(&self, b: &ParamVector) -> f64 {
        self.lambda * b.lp_norm(1)
    }

    fn prox_h(&self, v: &ParamVector, s: f64) -> Result<ParamVector> {
        let level = s * self.lambda;
        Ok(v.map(|x| soft_threshold_scalar(x, level)))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
