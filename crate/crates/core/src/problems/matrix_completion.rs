use std::collections::BTreeMap;

use nalgebra::{DMatrix, SVD};

use crate::composite::{CompositeProblem, ParamVector};
use crate::error::{Error, Result};

/// Nuclear-norm matrix completion:
/// `sum_{(i,j) observed} (Z_ij - A_ij)^2 / 2 + lambda * ||Z||_*`.
///
/// The unknown `Z` is `n x p`, stored row-major (`Z_ij` at `i * p + j`).
#[derive(Debug, Clone)]
pub struct MatrixCompletionProblem {
    n: usize,
    p: usize,
    /// Row-major flat index and observed value, sorted by index.
    observed: Vec<(usize, f64)>,
    lambda: f64,
}

fn svd_of(m: DMatrix<f64>, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailed);
    }
    SVD::try_new(m, vectors, vectors, f64::EPSILON, 0).ok_or(Error::SvdFailed)
}

/// Singular-value soft-thresholding. Returns the thresholded matrix and its
/// nuclear norm `sum (d_i - s)_+`.
fn shrink(m: DMatrix<f64>, s: f64) -> Result<(DMatrix<f64>, f64)> {
    let (rows, cols) = m.shape();
    let svd = svd_of(m, true)?;
    let u = svd.u.as_ref().ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::SvdFailed)?;
    let mut out = DMatrix::zeros(rows, cols);
    let mut nuclear = 0.0;
    for (k, &d) in svd.singular_values.iter().enumerate() {
        let shrunk = d - s;
        if shrunk > 0.0 {
            nuclear += shrunk;
            out.ger(shrunk, &u.column(k), &v_t.row(k).transpose(), 1.0);
        }
    }
    Ok((out, nuclear))
}

/// `U diag((d_i - s)_+) V^T` where `Z = U diag(d) V^T`.
pub fn svd_soft_threshold(z: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be non-negative, got {s}"
        )));
    }
    shrink(z.clone(), s).map(|(m, _)| m)
}

/// `P(Z) - P(A)`: zero off the observed set.
pub fn mc_gradient(prob: &MatrixCompletionProblem, z: &ParamVector) -> ParamVector {
    let mut g = ParamVector::zeros(prob.n * prob.p);
    for &(idx, a) in &prob.observed {
        g[idx] = z[idx] - a;
    }
    g
}

impl MatrixCompletionProblem {
    /// `observed` holds 0-based `(row, col, value)` triples. Repeated entries
    /// with the same value collapse; conflicting repeats are rejected.
    pub fn new(n: usize, p: usize, observed: Vec<(usize, usize, f64)>, lambda: f64) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidArgument(format!("matrix shape {n}x{p} is empty")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
        }
        let mut entries = BTreeMap::new();
        for (row, col, value) in observed {
            if row >= n || col >= p {
                return Err(Error::InvalidArgument(format!(
                    "observation ({row}, {col}) outside {n}x{p}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite observation at ({row}, {col})"
                )));
            }
            match entries.insert(row * p + col, value) {
                Some(prev) if prev != value => return Err(Error::DuplicateEntry { row, col }),
                _ => {}
            }
        }
        Ok(Self {
            n,
            p,
            observed: entries.into_iter().collect(),
            lambda,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    /// Observed `(row, col, value)` triples in row-major order.
    pub fn observed(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.observed.iter().map(move |&(idx, v)| (idx / self.p, idx % self.p, v))
    }

    /// `P(A)` as a dense `n x p` matrix.
    pub fn observed_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.p);
        for (i, j, v) in self.observed() {
            a[(i, j)] = v;
        }
        a
    }

    /// Smallest penalty with an all-zero solution: the spectral norm of `P(A)`.
    pub fn zero_solution_lambda(&self) -> Result<f64> {
        let svd = svd_of(self.observed_matrix(), false)?;
        Ok(svd.singular_values.max())
    }

    /// A row-major flat vector viewed column-major is the `p x n` transpose;
    /// singular values and thresholding commute with transposition.
    fn as_transposed(&self, z: &ParamVector) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.p, self.n, z.as_slice())
    }
}

impl CompositeProblem for MatrixCompletionProblem {
    fn dim(&self) -> usize {
        self.n * self.p
    }

    fn eval_g(&self, z: &ParamVector) -> f64 {
        0.5 * self
            .observed
            .iter()
            .map(|&(idx, a)| (z[idx] - a) * (z[idx] - a))
            .sum::<f64>()
    }

    fn grad_g(&self, z: &ParamVector) -> ParamVector {
        mc_gradient(self, z)
    }

    fn eval_h(&self, z: &ParamVector) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        match svd_of(self.as_transposed(z), false) {
            Ok(svd) => self.lambda * svd.singular_values.sum(),
            Err(_) => f64::NAN,
        }
    }

    fn prox_h(&self, z: &ParamVector, s: f64) -> Result<ParamVector> {
        self.prox_h_with_value(z, s).map(|(x, _)| x)
    }

    fn prox_h_with_value(&self, z: &ParamVector, s: f64) -> Result<(ParamVector, f64)> {
        let level = s * self.lambda;
        let (m, nuclear) = shrink(self.as_transposed(z), level)?;
        let (rows, cols) = m.shape();
        let out: ParamVector = m.reshape_generic(nalgebra::Dyn(rows * cols), nalgebra::Const::<1>);
        Ok((out, self.lambda * nuclear))
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}
