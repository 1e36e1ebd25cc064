use nalgebra::{DMatrix, DVector};

use super::{check_matrix_finite, gram_lambda_max, soft_threshold_scalar};
use crate::composite::{CompositeProblem, ParamVector};
use crate::error::{Error, Result};

/// l1-penalised logistic regression:
/// `sum log(1 + exp(X b)) - b^T X^T y + lambda * ||b||_1` with `y` in `{0, 1}`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    lambda: f64,
    lipschitz: f64,
}

/// `log(1 + e^u)` without overflow.
#[inline]
fn log1p_exp(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^{-u})`, evaluated on the stable branch.
#[inline]
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem {
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
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(format!(
                "labels must be 0 or 1, found {} at row {i}",
                y[i]
            )));
        }
        let lipschitz = gram_lambda_max(&x) / 4.0;
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidArgument("design matrix is identically zero".into()));
        }
        Ok(Self { x, y, lambda, lipschitz })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    /// Smallest penalty with an all-zero solution: `||X^T (y - 1/2)||_inf`.
    pub fn zero_solution_lambda(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        x.tr_mul(&y.map(|v| v - 0.5)).amax()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `X^T (theta(X b) - y)`.
pub fn logistic_gradient(prob: &LogisticProblem, beta: &ParamVector) -> ParamVector {
    let mut u = &prob.x * beta;
    u.zip_apply(&prob.y, |ui, yi| *ui = sigmoid(*ui) - yi);
    prob.x.tr_mul(&u)
}

impl CompositeProblem for LogisticProblem {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn eval_g(&self, beta: &ParamVector) -> f64 {
        let u = &self.x * beta;
        u.iter()
            .zip(self.y.iter())
            .map(|(&ui, &yi)| log1p_exp(ui) - yi * ui)
            .sum()
    }

    fn grad_g(&self, beta: &ParamVector) -> ParamVector {
        logistic_gradient(self, beta)
    }

    fn eval_h(&self, beta: &ParamVector) -> f64 {
        self.lambda * beta.lp_norm(1)
    }

    fn prox_h(&self, v: &ParamVector, s: f64) -> Result<ParamVector> {
        let level = s * self.lambda;
        Ok(v.map(|x| soft_threshold_scalar(x, level)))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
