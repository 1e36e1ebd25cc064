use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use proxaccel_cli::experiment::{failures_csv, run_experiment, run_method, step_config, trace_file_name, SUMMARY_HEADER};
use proxaccel_cli::output::{create_dir, trace_csv, write_file};
use proxaccel_cli::{build_instance, fmt_num, run_path, write_dataset, ExperimentConfig, MethodSpec};

#[derive(Parser)]
#[command(name = "proxaccel", version, about = "Accelerated proximal gradient solves and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem instance with one method.
    Solve(Common),
    /// Run every configured method on every seed and summarize.
    Bench(Common),
    /// Solve a decreasing penalty sequence with warm starts.
    Path(Common),
    /// Write the synthetic dataset(s) to disk.
    Gen(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replaces the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `out_dir` from the config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Method label from the config or a name such as `nidaarem_fm`;
    /// repeat to select several.
    #[arg(long)]
    method: Vec<String>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if !self.method.is_empty() {
            let mut picked = Vec::new();
            for name in &self.method {
                match cfg.methods.iter().find(|m| &m.label() == name) {
                    Some(m) => picked.push(m.clone()),
                    None => picked.push(MethodSpec::from_name(name)?),
                }
            }
            cfg.methods = picked;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out_dir.as_ref().map(|d| cfg.resolve(d)))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn solve(args: &Common) -> anyhow::Result<bool> {
    let cfg = args.load()?;
    if cfg.methods.len() != 1 {
        bail!("solve needs exactly one method; pass --method");
    }
    let spec = &cfg.methods[0];
    let seed = cfg.seeds[0];
    let inst = build_instance(&cfg, seed)?;
    let p = inst.problem();
    let rep = run_method(spec, p, &DVector::zeros(p.dim()), step_config(&cfg, p))?;
    let label = spec.label();
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_file(&out.join(trace_file_name(&label, seed)), &trace_csv(&rep))?;
    }
    println!("method,seed,converged,pg_steps,iterations,final_obj,wall_time");
    println!(
        "{label},{seed},{},{},{},{},{}",
        rep.converged,
        rep.pg_steps,
        rep.iterations,
        fmt_num(rep.final_obj),
        fmt_num(rep.wall_time)
    );
    Ok(rep.converged)
}

fn bench(args: &Common) -> anyhow::Result<bool> {
    let cfg = args.load()?;
    let out = args.out_dir(&cfg);
    let outcome = run_experiment(&cfg, &out)?;
    println!("{}", SUMMARY_HEADER.join(","));
    for r in &outcome.summary {
        println!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.runs,
            r.converged,
            fmt_num(r.pg_steps_mean),
            fmt_num(r.pg_steps_median),
            fmt_num(r.pg_steps_sd),
            fmt_num(r.wall_mean),
            fmt_num(r.wall_median),
            fmt_num(r.final_obj_mean),
            r.status
        );
    }
    let ok = outcome.all_converged();
    if !ok {
        eprint!("{}", failures_csv(&outcome));
    }
    Ok(ok)
}

fn path(args: &Common) -> anyhow::Result<bool> {
    let cfg = args.load()?;
    let out = args.out_dir(&cfg);
    let outcome = run_path(&cfg, &out)?;
    print_file(&out.join("path_summary.csv"))?;
    let ok = outcome.all_converged();
    if !ok {
        eprint!("{}", std::fs::read_to_string(out.join("failures.csv"))?);
    }
    Ok(ok)
}

fn gen(args: &Common) -> anyhow::Result<bool> {
    let cfg = args.load()?;
    let out = args.out_dir(&cfg);
    for &seed in &cfg.seeds {
        for f in write_dataset(&cfg, seed, &out)? {
            println!("{}", f.display());
        }
    }
    Ok(true)
}

fn print_file(path: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Path(a) => path(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        // some run stopped without converging
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
