//! Turning a [`ProblemSpec`] plus seed into a concrete problem.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use proxaccel::simgen::{
    gen_lasso_data, gen_logistic_data, gen_mc_data, gen_qp, load_design, load_ratings, LassoSimSpec, McSimSpec,
    QPSimSpec,
};
use proxaccel::{BoxQPProblem, CompositeProblem, LassoProblem, LogisticProblem, MatrixCompletionProblem};

use crate::config::{ExperimentConfig, ProblemSpec, RegressionSpec};
use crate::error::{CliError, Result};
use crate::output::{create_dir, fmt_num, write_file};

/// `||X^T y||_inf`: the smallest lasso penalty whose solution is zero.
pub fn lambda_max_lasso(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    LassoProblem::zero_solution_lambda(x, y)
}

pub enum Instance {
    Lasso(LassoProblem),
    Logistic(LogisticProblem),
    Completion(MatrixCompletionProblem),
    BoxQp(BoxQPProblem),
}

impl Instance {
    pub fn problem(&self) -> &dyn CompositeProblem {
        match self {
            Instance::Lasso(p) => p,
            Instance::Logistic(p) => p,
            Instance::Completion(p) => p,
            Instance::BoxQp(p) => p,
        }
    }

    /// Smallest penalty with an all-zero solution; `None` for unpenalized
    /// backends.
    pub fn lambda_zero(&self) -> Result<Option<f64>> {
        Ok(match self {
            Instance::Lasso(p) => Some(lambda_max_lasso(p.design(), p.response())),
            Instance::Logistic(p) => Some(LogisticProblem::zero_solution_lambda(p.design(), p.labels())),
            Instance::Completion(p) => Some(p.zero_solution_lambda()?),
            Instance::BoxQp(_) => None,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Instance> {
        Ok(match self {
            Instance::Lasso(p) => Instance::Lasso(p.with_lambda(lambda)?),
            Instance::Logistic(p) => Instance::Logistic(p.with_lambda(lambda)?),
            Instance::Completion(p) => Instance::Completion(p.with_lambda(lambda)?),
            Instance::BoxQp(_) => {
                return Err(CliError::Config("box_qp has no penalty to set".into()));
            }
        })
    }
}

fn sim_spec(r: &RegressionSpec, seed: u64) -> LassoSimSpec {
    let mut s = LassoSimSpec::new(r.n, r.p, r.rho, seed);
    if let Some(sp) = r.sparsity {
        s.sparsity = sp;
    }
    s
}

fn mc_spec(c: &crate::config::CompletionSpec, seed: u64) -> McSimSpec {
    let mut s = McSimSpec::new(c.n, c.p, seed);
    if let Some(v) = c.rank {
        s.rank = v;
    }
    if let Some(v) = c.observed_frac {
        s.observed_frac = v;
    }
    if let Some(v) = c.noise_sd {
        s.noise_sd = v;
    }
    s
}

fn qp_spec(q: &crate::config::QpSpec, seed: u64) -> QPSimSpec {
    let mut s = QPSimSpec::new(q.p, q.cond, seed);
    if let Some(v) = q.noise_sd {
        s.noise_sd = v;
    }
    s
}

/// The configured problem with penalty zero. The seed is ignored for data
/// loaded from files.
pub fn build_unpenalized(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    Ok(match &cfg.problem {
        ProblemSpec::Lasso(r) => {
            let (x, y) = regression_data(cfg, r, seed, false)?;
            Instance::Lasso(LassoProblem::new(x, y, 0.0)?)
        }
        ProblemSpec::Logistic(r) => {
            let (x, y) = regression_data(cfg, r, seed, true)?;
            Instance::Logistic(LogisticProblem::new(x, y, 0.0)?)
        }
        ProblemSpec::MatrixCompletion(c) => match &c.ratings {
            Some(path) => Instance::Completion(load_ratings(cfg.resolve(path))?),
            None => Instance::Completion(MatrixCompletionProblem::new(c.n, c.p, gen_mc_data(&mc_spec(c, seed))?, 0.0)?),
        },
        ProblemSpec::BoxQp(q) => {
            let (qm, qv) = gen_qp(&qp_spec(q, seed))?;
            Instance::BoxQp(BoxQPProblem::new(qm, qv)?)
        }
    })
}

fn regression_data(
    cfg: &ExperimentConfig,
    r: &RegressionSpec,
    seed: u64,
    logistic: bool,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if let (Some(dx), Some(dy)) = (&r.design, &r.response) {
        return Ok(load_design(cfg.resolve(dx), cfg.resolve(dy))?);
    }
    let spec = sim_spec(r, seed);
    let (x, y, _) = if logistic { gen_logistic_data(&spec)? } else { gen_lasso_data(&spec)? };
    Ok((x, y))
}

/// Configured penalty given the zero-solution value.
pub fn configured_lambda(cfg: &ExperimentConfig, lambda_zero: f64) -> Result<f64> {
    let (lambda, frac) = match &cfg.problem {
        ProblemSpec::Lasso(r) | ProblemSpec::Logistic(r) => (r.lambda, r.lambda_frac),
        ProblemSpec::MatrixCompletion(c) => (c.lambda, c.lambda_frac),
        ProblemSpec::BoxQp(_) => return Err(CliError::Config("box_qp has no penalty".into())),
    };
    match (lambda, frac) {
        (Some(l), None) => Ok(l),
        (None, Some(f)) => Ok(f * lambda_zero),
        _ => Err(CliError::Config("set exactly one of lambda or lambda_frac".into())),
    }
}

/// The problem exactly as configured for one seed.
pub fn build_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let base = build_unpenalized(cfg, seed)?;
    match base.lambda_zero()? {
        None => Ok(base),
        Some(l0) => base.with_lambda(configured_lambda(cfg, l0)?),
    }
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

fn vector_csv(v: &DVector<f64>) -> String {
    v.iter().map(|x| fmt_num(*x) + "\n").collect()
}

/// Writes the synthetic data for one seed; returns the files written.
pub fn write_dataset(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out)?;
    let mut files: Vec<(String, String)> = Vec::new();
    match &cfg.problem {
        ProblemSpec::Lasso(r) | ProblemSpec::Logistic(r) => {
            if r.design.is_some() {
                return Err(CliError::Config("problem reads its data from files; nothing to generate".into()));
            }
            let spec = sim_spec(r, seed);
            let (x, y, beta) = if matches!(cfg.problem, ProblemSpec::Logistic(_)) {
                gen_logistic_data(&spec)?
            } else {
                gen_lasso_data(&spec)?
            };
            files.push((format!("X_{seed}.csv"), matrix_csv(&x)));
            files.push((format!("y_{seed}.csv"), vector_csv(&y)));
            files.push((format!("beta_{seed}.csv"), vector_csv(&beta)));
        }
        ProblemSpec::MatrixCompletion(c) => {
            if c.ratings.is_some() {
                return Err(CliError::Config("problem reads its data from files; nothing to generate".into()));
            }
            let entries = gen_mc_data(&mc_spec(c, seed))?;
            let text: String = entries
                .iter()
                .map(|(i, j, v)| format!("{}\t{}\t{}\n", i + 1, j + 1, fmt_num(*v)))
                .collect();
            files.push((format!("ratings_{seed}.tsv"), text));
        }
        ProblemSpec::BoxQp(q) => {
            let (qm, qv) = gen_qp(&qp_spec(q, seed))?;
            files.push((format!("Q_{seed}.csv"), matrix_csv(&qm)));
            files.push((format!("q_{seed}.csv"), vector_csv(&qv)));
        }
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let path = out.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}
