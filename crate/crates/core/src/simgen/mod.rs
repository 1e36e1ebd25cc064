//! Seeded synthetic data and plain-text loaders.
//!
//! Every generator is a pure function of its spec. Randomness comes from
//! ChaCha20 seeded with `seed_from_u64(seed)`; each output array draws from its
//! own stream (`set_stream`), so e.g. changing the noise draw never perturbs
//! the design. Designs are filled column by column, so enlarging `p` leaves
//! the leading columns unchanged. Any change to these rules bumps
//! [`GENERATOR_VERSION`].

mod loaders;

pub use loaders::{load_design, load_ratings};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const GENERATOR_VERSION: &str = "chacha20-streams-1";

const STREAM_DESIGN: u64 = 0;
const STREAM_COEF: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_MASK: u64 = 3;
const QP_MAX_RETRIES: usize = 3;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSimSpec {
    pub n: usize,
    pub p: usize,
    /// AR(1) correlation between neighbouring columns.
    pub rho: f64,
    /// Probability that a true coefficient is zero.
    pub sparsity: f64,
    pub seed: u64,
}

impl LassoSimSpec {
    pub fn new(n: usize, p: usize, rho: f64, seed: u64) -> Self {
        Self { n, p, rho, sparsity: 0.8, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidArgument(format!("empty design {}x{}", self.n, self.p)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::InvalidArgument(format!("sparsity must lie in [0, 1], got {}", self.sparsity)));
        }
        Ok(())
    }
}

/// Rows are i.i.d. with `cov(X_ij, X_ik) = rho^|j-k|`, built by the AR(1)
/// recursion `X_i1 = Z_1`, `X_ij = rho X_i,j-1 + sqrt(1 - rho^2) Z_j`.
fn ar1_design(n: usize, p: usize, rho: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed, STREAM_DESIGN);
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            let z = normal(&mut rng);
            x[(i, j)] = if j == 0 { z } else { rho * x[(i, j - 1)] + innov * z };
        }
    }
    x
}

/// Each coefficient is zero with probability `sparsity`, otherwise a
/// Student-t draw with three degrees of freedom.
fn sparse_t3(p: usize, sparsity: f64, seed: u64) -> DVector<f64> {
    let mut rng = stream(seed, STREAM_COEF);
    let chi = ChiSquared::new(3.0).expect("valid degrees of freedom");
    DVector::from_fn(p, |_, _| {
        let u: f64 = rng.random();
        let z = normal(&mut rng);
        let c: f64 = chi.sample(&mut rng);
        if u < sparsity {
            0.0
        } else {
            z / (c / 3.0).sqrt()
        }
    })
}

/// `(X, y, beta)` with `y = X beta + e`, `e` standard normal.
pub fn gen_lasso_data(spec: &LassoSimSpec) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    spec.validate()?;
    let x = ar1_design(spec.n, spec.p, spec.rho, spec.seed);
    let beta = sparse_t3(spec.p, spec.sparsity, spec.seed);
    let mut rng = stream(spec.seed, STREAM_NOISE);
    let mut y = &x * &beta;
    for v in y.iter_mut() {
        *v += normal(&mut rng);
    }
    Ok((x, y, beta))
}

/// Same design and coefficients as [`gen_lasso_data`], with binary responses
/// `y_i ~ Bernoulli(1 / (1 + exp(-x_i^T beta)))`.
pub fn gen_logistic_data(spec: &LassoSimSpec) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    spec.validate()?;
    let x = ar1_design(spec.n, spec.p, spec.rho, spec.seed);
    let beta = sparse_t3(spec.p, spec.sparsity, spec.seed);
    let mut rng = stream(spec.seed, STREAM_NOISE);
    let eta = &x * &beta;
    let y = eta.map(|e| {
        let prob = 1.0 / (1.0 + (-e).exp());
        let u: f64 = rng.random();
        if u < prob {
            1.0
        } else {
            0.0
        }
    });
    Ok((x, y, beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QPSimSpec {
    pub p: usize,
    /// Target ratio of extreme eigenvalues of `Q`.
    pub cond: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl QPSimSpec {
    pub fn new(p: usize, cond: f64, seed: u64) -> Self {
        Self { p, cond, noise_sd: 0.2, seed }
    }
}

/// Log-linear spectrum from `cond` down to 1.
pub fn qp_spectrum(p: usize, cond: f64) -> DVector<f64> {
    DVector::from_fn(p, |j, _| (cond.ln() * (1.0 - j as f64 / (p - 1) as f64)).exp())
}

/// `(Q, q)` with `Q = U diag(d) U^T`.
///
/// `U = B (B^T B)^{-1/2}` is the orthogonal polar factor of a Gaussian `B`,
/// so the eigenvalues of `Q` are exactly `d` and `cond(Q) = cond`.
/// `q_j = e_j * sd(Q_.j)` with `e_j ~ N(0, noise_sd^2)`.
pub fn gen_qp(spec: &QPSimSpec) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = spec.p;
    if p < 2 {
        return Err(Error::InvalidArgument(format!("p must be >= 2, got {p}")));
    }
    if !(spec.cond >= 1.0 && spec.cond.is_finite()) {
        return Err(Error::InvalidArgument(format!("cond must be finite and >= 1, got {}", spec.cond)));
    }
    if !(spec.noise_sd >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise_sd must be >= 0, got {}", spec.noise_sd)));
    }
    let mut rng = stream(spec.seed, STREAM_DESIGN);
    let mut u = None;
    for _ in 0..=QP_MAX_RETRIES {
        let b = DMatrix::from_fn(p, p, |_, _| normal(&mut rng));
        let eig = SymmetricEigen::new(b.tr_mul(&b));
        if eig.eigenvalues.min() <= 1e-12 * eig.eigenvalues.max() {
            continue;
        }
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        u = Some(b * inv_sqrt);
        break;
    }
    let u = u.ok_or_else(|| Error::InvalidArgument("could not draw a nonsingular basis".into()))?;
    let d = qp_spectrum(p, spec.cond);
    let q = &u * DMatrix::from_diagonal(&d) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;

    let mut rng = stream(spec.seed, STREAM_NOISE);
    let lin = DVector::from_fn(p, |j, _| {
        let col = q.column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (p - 1) as f64).sqrt();
        spec.noise_sd * normal(&mut rng) * sd
    });
    Ok((q, lin))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSimSpec {
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    /// Probability that an entry is observed.
    pub observed_frac: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl McSimSpec {
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        Self { n, p, rank: 5, observed_frac: 0.2, noise_sd: 0.5, seed }
    }
}

/// Observed entries `(i, j, a_ij)` of `A = U V^T + e` with Gaussian rank-`rank`
/// factors scaled so entries have unit variance, each entry observed
/// independently with probability `observed_frac`.
pub fn gen_mc_data(spec: &McSimSpec) -> Result<Vec<(usize, usize, f64)>> {
    if spec.n == 0 || spec.p == 0 || spec.rank == 0 {
        return Err(Error::InvalidArgument("empty matrix completion spec".into()));
    }
    if !(spec.observed_frac > 0.0 && spec.observed_frac <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "observed_frac must lie in (0, 1], got {}",
            spec.observed_frac
        )));
    }
    let mut rng = stream(spec.seed, STREAM_DESIGN);
    let scale = (spec.rank as f64).powf(-0.25);
    let left = DMatrix::from_fn(spec.n, spec.rank, |_, _| scale * normal(&mut rng));
    let right = DMatrix::from_fn(spec.p, spec.rank, |_, _| scale * normal(&mut rng));
    let signal = left * right.transpose();
    let mut mask = stream(spec.seed, STREAM_MASK);
    let mut noise = stream(spec.seed, STREAM_NOISE);
    let mut out = Vec::new();
    for i in 0..spec.n {
        for j in 0..spec.p {
            let u: f64 = mask.random();
            let e = spec.noise_sd * normal(&mut noise);
            if u < spec.observed_frac {
                out.push((i, j, signal[(i, j)] + e));
            }
        }
    }
    if out.is_empty() {
        out.push((0, 0, signal[(0, 0)]));
    }
    Ok(out)
}
