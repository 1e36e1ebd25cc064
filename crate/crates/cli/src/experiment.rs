//! Multi-method, multi-seed sweeps.

use std::path::Path;

use nalgebra::DVector;
use proxaccel::simgen::GENERATOR_VERSION;
use proxaccel::{
    run_aa_restart, run_daarem, run_nesterov, run_nesterov_restart, run_nidaarem, run_pgd, CompositeProblem,
    ParamVector, RunReport, StepConfig,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MethodKind, MethodSpec};
use crate::error::Result;
use crate::instance::{build_instance, Instance};
use crate::output::{create_dir, csv_field, csv_text, fmt_num, trace_csv, write_file};

pub fn step_config(cfg: &ExperimentConfig, problem: &dyn CompositeProblem) -> StepConfig {
    StepConfig::for_problem(problem)
        .with_t(cfg.step_scale / problem.lipschitz())
        .with_eps_stop(cfg.eps_stop)
        .with_max_iter(cfg.max_iter)
}

pub fn run_method(
    spec: &MethodSpec,
    problem: &dyn CompositeProblem,
    x0: &ParamVector,
    step: StepConfig,
) -> proxaccel::Result<RunReport> {
    match spec.kind {
        MethodKind::Pgd => run_pgd(problem, x0, step),
        MethodKind::Nesterov => run_nesterov(problem, x0, step),
        MethodKind::NesterovRestart => run_nesterov_restart(problem, x0, step, spec.restart_criterion()),
        MethodKind::AaRestart => run_aa_restart(problem, x0, step, spec.window()),
        MethodKind::Daarem => run_daarem(problem, x0, step, &spec.daarem_config()),
        MethodKind::Nidaarem => run_nidaarem(
            problem,
            x0,
            step,
            &spec.daarem_config(),
            spec.restart_criterion(),
            spec.switch_cap(),
        ),
    }
}

/// One (method, seed) cell of a sweep; `Err` holds the failure message.
#[derive(Debug)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub outcome: std::result::Result<RunReport, String>,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.converged)
    }

    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(r) if r.converged => "converged",
            Ok(_) => "not_converged",
            Err(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub runs: usize,
    pub converged: usize,
    pub pg_steps_mean: f64,
    pub pg_steps_median: f64,
    pub pg_steps_sd: f64,
    pub wall_mean: f64,
    pub wall_median: f64,
    pub final_obj_mean: f64,
    pub status: &'static str,
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "method",
    "runs",
    "converged",
    "pg_steps_mean",
    "pg_steps_median",
    "pg_steps_sd",
    "wall_mean",
    "wall_median",
    "final_obj_mean",
    "status",
];

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Sample standard deviation; 0 for a single value.
pub fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return if v.is_empty() { f64::NAN } else { 0.0 };
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl SummaryRow {
    /// Aggregates over every record of one method; errored runs count in
    /// `runs` but contribute no numbers.
    pub fn from_records(method: &str, records: &[&RunRecord]) -> Self {
        let reports: Vec<&RunReport> = records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let steps: Vec<f64> = reports.iter().map(|r| r.pg_steps as f64).collect();
        let walls: Vec<f64> = reports.iter().map(|r| r.wall_time).collect();
        let objs: Vec<f64> = reports.iter().map(|r| r.final_obj).collect();
        let converged = records.iter().filter(|r| r.converged()).count();
        let status = if reports.len() < records.len() {
            "error"
        } else if converged < records.len() {
            "not_converged"
        } else {
            "ok"
        };
        Self {
            method: method.to_string(),
            runs: records.len(),
            converged,
            pg_steps_mean: mean(&steps),
            pg_steps_median: median(&steps),
            pg_steps_sd: sd(&steps),
            wall_mean: mean(&walls),
            wall_median: median(&walls),
            final_obj_mean: mean(&objs),
            status,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.runs.to_string(),
            self.converged.to_string(),
            fmt_num(self.pg_steps_mean),
            fmt_num(self.pg_steps_median),
            fmt_num(self.pg_steps_sd),
            fmt_num(self.wall_mean),
            fmt_num(self.wall_median),
            fmt_num(self.final_obj_mean),
            self.status.to_string(),
        ]
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// Sorted by method label, then seed.
    pub runs: Vec<RunRecord>,
    /// One row per method, sorted by label.
    pub summary: Vec<SummaryRow>,
    /// Smallest final objective over all runs.
    pub phi_star: Option<f64>,
}

impl ExperimentOutcome {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(RunRecord::converged)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| !r.converged())
    }

    pub fn get(&self, method: &str, seed: u64) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.method == method && r.seed == seed)
    }

    pub fn summary_for(&self, method: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method)
    }
}

/// Runs every (method, seed) pair on a rayon pool without touching disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let instances: Vec<(u64, std::result::Result<Instance, String>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| (seed, build_instance(cfg, seed).map_err(|e| e.to_string())))
        .collect();
    let jobs: Vec<(&MethodSpec, &(u64, std::result::Result<Instance, String>))> =
        cfg.methods.iter().flat_map(|m| instances.iter().map(move |i| (m, i))).collect();
    let mut runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|(spec, (seed, inst))| {
            let outcome = match inst {
                Ok(inst) => {
                    let p = inst.problem();
                    run_method(spec, p, &DVector::zeros(p.dim()), step_config(cfg, p)).map_err(|e| e.to_string())
                }
                Err(msg) => Err(format!("problem setup failed: {msg}")),
            };
            RunRecord { method: spec.label(), seed: *seed, outcome }
        })
        .collect();
    runs.sort_by(|a, b| (&a.method, a.seed).cmp(&(&b.method, b.seed)));

    let mut labels: Vec<String> = cfg.methods.iter().map(MethodSpec::label).collect();
    labels.sort();
    let summary = labels
        .iter()
        .map(|l| {
            let recs: Vec<&RunRecord> = runs.iter().filter(|r| &r.method == l).collect();
            SummaryRow::from_records(l, &recs)
        })
        .collect();
    let phi_star = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|r| r.final_obj)
        .filter(|v| v.is_finite())
        .min_by(f64::total_cmp);
    Ok(ExperimentOutcome { runs, summary, phi_star })
}

pub fn trace_file_name(method: &str, seed: u64) -> String {
    format!("trace_{method}_{seed}.csv")
}

/// Writes traces, `runs.csv`, `summary.csv`, `summary_meta.csv` and
/// `failures.csv` into `out`.
pub fn write_outputs(cfg: &ExperimentConfig, outcome: &ExperimentOutcome, out: &Path) -> Result<()> {
    create_dir(out)?;
    for r in &outcome.runs {
        if let Ok(rep) = &r.outcome {
            write_file(&out.join(trace_file_name(&r.method, r.seed)), &trace_csv(rep))?;
        }
    }

    let run_rows: Vec<Vec<String>> = outcome
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![r.method.clone(), r.seed.to_string(), r.status().to_string()];
            match &r.outcome {
                Ok(rep) => row.extend([
                    rep.pg_steps.to_string(),
                    rep.iterations.to_string(),
                    fmt_num(rep.final_obj),
                    rep.switch_iter.map(|s| s.to_string()).unwrap_or_default(),
                    fmt_num(rep.wall_time),
                ]),
                Err(_) => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            row
        })
        .collect();
    write_file(
        &out.join("runs.csv"),
        &csv_text(
            &["method", "seed", "status", "pg_steps", "iterations", "final_obj", "switch_iter", "wall_time"],
            &run_rows,
        ),
    )?;

    let summary_rows: Vec<Vec<String>> = outcome.summary.iter().map(SummaryRow::fields).collect();
    write_file(&out.join("summary.csv"), &csv_text(&SUMMARY_HEADER, &summary_rows))?;

    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    let meta = vec![
        vec!["phi_star".into(), outcome.phi_star.map(fmt_num).unwrap_or_default()],
        vec!["generator_version".into(), GENERATOR_VERSION.into()],
        vec!["seeds".into(), seeds.join(" ")],
        vec!["eps_stop".into(), fmt_num(cfg.eps_stop)],
        vec!["max_iter".into(), cfg.max_iter.to_string()],
        vec!["step_scale".into(), fmt_num(cfg.step_scale)],
    ];
    write_file(&out.join("summary_meta.csv"), &csv_text(&["key", "value"], &meta))?;

    write_file(&out.join("failures.csv"), &failures_csv(outcome))?;
    Ok(())
}

/// Machine-readable list of runs that did not converge.
pub fn failures_csv(outcome: &ExperimentOutcome) -> String {
    let rows: Vec<Vec<String>> = outcome
        .failures()
        .map(|r| {
            let msg = match &r.outcome {
                Ok(rep) => format!("stopped after {} iterations", rep.iterations),
                Err(e) => e.clone(),
            };
            vec![r.method.clone(), r.seed.to_string(), r.status().to_string(), csv_field(&msg)]
        })
        .collect();
    csv_text(&["method", "seed", "status", "message"], &rows)
}

/// [`execute`] followed by [`write_outputs`].
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let outcome = execute(cfg)?;
    write_outputs(cfg, &outcome, out)?;
    Ok(outcome)
}
