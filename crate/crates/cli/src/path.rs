//! Warm-started regularization paths.

use std::path::Path;

use nalgebra::DVector;
use proxaccel::ParamVector;
use rayon::prelude::*;

use crate::config::{check_decreasing, ExperimentConfig, MethodSpec, PathSpec};
use crate::error::{CliError, Result};
use crate::experiment::{mean, median, run_method, step_config};
use crate::instance::{build_unpenalized, Instance};
use crate::output::{create_dir, csv_field, csv_text, fmt_num, write_file};

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub pg_steps: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_obj: f64,
    /// Number of nonzero coordinates in the solution.
    pub nnz: usize,
    pub wall_time: f64,
}

/// Solves `lambdas` in order. With `warm`, each solve starts from the
/// previous solution; otherwise every solve starts from zero.
pub fn solve_path(
    cfg: &ExperimentConfig,
    spec: &MethodSpec,
    base: &Instance,
    lambdas: &[f64],
    warm: bool,
) -> Result<(Vec<PathPoint>, ParamVector)> {
    check_decreasing(lambdas)?;
    let dim = base.problem().dim();
    let mut x = DVector::zeros(dim);
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let inst = base.with_lambda(lambda)?;
        let p = inst.problem();
        let x0 = if warm { x } else { DVector::zeros(dim) };
        let rep = run_method(spec, p, &x0, step_config(cfg, p))?;
        points.push(PathPoint {
            lambda,
            pg_steps: rep.pg_steps,
            iterations: rep.iterations,
            converged: rep.converged,
            final_obj: rep.final_obj,
            nnz: rep.final_x.iter().filter(|v| **v != 0.0).count(),
            wall_time: rep.wall_time,
        });
        x = rep.final_x;
    }
    Ok((points, x))
}

#[derive(Debug)]
pub struct PathRun {
    pub method: String,
    pub seed: u64,
    pub warm: bool,
    pub outcome: std::result::Result<Vec<PathPoint>, String>,
}

impl PathRun {
    pub fn total_pg_steps(&self) -> Option<usize> {
        self.outcome.as_ref().ok().map(|p| p.iter().map(|q| q.pg_steps).sum())
    }

    pub fn total_wall(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|p| p.iter().map(|q| q.wall_time).sum())
    }

    pub fn converged(&self) -> bool {
        matches!(&self.outcome, Ok(p) if p.iter().all(|q| q.converged))
    }

    fn mode(&self) -> &'static str {
        if self.warm {
            "warm"
        } else {
            "cold"
        }
    }
}

#[derive(Debug)]
pub struct PathOutcome {
    /// Sorted by method, seed, then cold before warm.
    pub runs: Vec<PathRun>,
}

impl PathOutcome {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(PathRun::converged)
    }

    pub fn get(&self, method: &str, seed: u64, warm: bool) -> Option<&PathRun> {
        self.runs.iter().find(|r| r.method == method && r.seed == seed && r.warm == warm)
    }
}

fn path_spec(cfg: &ExperimentConfig) -> PathSpec {
    cfg.path.clone().unwrap_or(PathSpec {
        lambdas: None,
        n_lambda: 10,
        ratio: 0.01,
        lambda_1: None,
        compare_cold: true,
    })
}

/// Runs every (method, seed, start mode) path on a rayon pool.
pub fn execute_path(cfg: &ExperimentConfig) -> Result<PathOutcome> {
    cfg.validate()?;
    let pspec = path_spec(cfg);
    let mut bases = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let base = build_unpenalized(cfg, seed)?;
        let l0 = base
            .lambda_zero()?
            .ok_or_else(|| CliError::Config("regularization paths need a penalized backend".into()))?;
        let grid = pspec.grid(l0)?;
        bases.push((seed, base, grid));
    }
    let modes: &[bool] = if pspec.compare_cold { &[false, true] } else { &[true] };
    let jobs: Vec<(&MethodSpec, &(u64, Instance, Vec<f64>), bool)> = cfg
        .methods
        .iter()
        .flat_map(|m| bases.iter().flat_map(move |b| modes.iter().map(move |&w| (m, b, w))))
        .collect();
    let mut runs: Vec<PathRun> = jobs
        .par_iter()
        .map(|(spec, (seed, base, grid), warm)| PathRun {
            method: spec.label(),
            seed: *seed,
            warm: *warm,
            outcome: solve_path(cfg, spec, base, grid, *warm).map(|(p, _)| p).map_err(|e| e.to_string()),
        })
        .collect();
    runs.sort_by(|a, b| (&a.method, a.seed, a.warm).cmp(&(&b.method, b.seed, b.warm)));
    Ok(PathOutcome { runs })
}

/// Writes `path.csv` (one row per solve), `path_summary.csv` (per method
/// and start mode) and `failures.csv`.
pub fn write_path_outputs(outcome: &PathOutcome, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut rows = Vec::new();
    for r in &outcome.runs {
        if let Ok(points) = &r.outcome {
            for (j, q) in points.iter().enumerate() {
                rows.push(vec![
                    r.method.clone(),
                    r.seed.to_string(),
                    r.mode().into(),
                    (j + 1).to_string(),
                    fmt_num(q.lambda),
                    if q.converged { "converged" } else { "not_converged" }.into(),
                    q.pg_steps.to_string(),
                    q.iterations.to_string(),
                    fmt_num(q.final_obj),
                    q.nnz.to_string(),
                    fmt_num(q.wall_time),
                ]);
            }
        }
    }
    write_file(
        &out.join("path.csv"),
        &csv_text(
            &[
                "method",
                "seed",
                "mode",
                "index",
                "lambda",
                "status",
                "pg_steps",
                "iterations",
                "final_obj",
                "nnz",
                "wall_time",
            ],
            &rows,
        ),
    )?;

    let mut keys: Vec<(&str, bool)> = outcome.runs.iter().map(|r| (r.method.as_str(), r.warm)).collect();
    keys.sort();
    keys.dedup();
    let summary: Vec<Vec<String>> = keys
        .iter()
        .map(|&(method, warm)| {
            let group: Vec<&PathRun> = outcome.runs.iter().filter(|r| r.method == method && r.warm == warm).collect();
            let totals: Vec<f64> = group.iter().filter_map(|r| r.total_pg_steps()).map(|t| t as f64).collect();
            let walls: Vec<f64> = group.iter().filter_map(|r| r.total_wall()).collect();
            let status = if totals.len() < group.len() {
                "error"
            } else if group.iter().all(|r| r.converged()) {
                "ok"
            } else {
                "not_converged"
            };
            vec![
                method.to_string(),
                if warm { "warm" } else { "cold" }.into(),
                group.len().to_string(),
                fmt_num(mean(&totals)),
                fmt_num(median(&totals)),
                fmt_num(mean(&walls)),
                status.into(),
            ]
        })
        .collect();
    write_file(
        &out.join("path_summary.csv"),
        &csv_text(
            &["method", "mode", "seeds", "total_pg_steps_mean", "total_pg_steps_median", "total_wall_mean", "status"],
            &summary,
        ),
    )?;

    let failures: Vec<Vec<String>> = outcome
        .runs
        .iter()
        .filter(|r| !r.converged())
        .map(|r| {
            let msg = match &r.outcome {
                Ok(points) => {
                    let bad: Vec<String> = points.iter().filter(|q| !q.converged).map(|q| fmt_num(q.lambda)).collect();
                    format!("not converged at lambda {}", bad.join(" "))
                }
                Err(e) => e.clone(),
            };
            vec![r.method.clone(), r.seed.to_string(), r.mode().into(), csv_field(&msg)]
        })
        .collect();
    write_file(&out.join("failures.csv"), &csv_text(&["method", "seed", "mode", "message"], &failures))?;
    Ok(())
}

pub fn run_path(cfg: &ExperimentConfig, out: &Path) -> Result<PathOutcome> {
    let outcome = execute_path(cfg)?;
    write_path_outputs(&outcome, out)?;
    Ok(outcome)
}
