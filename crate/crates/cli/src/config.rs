//! TOML experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use proxaccel::{DaaremConfig, Monitor, RestartCriterion};
use serde::Deserialize;

use crate::error::{CliError, Result};

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_eps_stop() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    500_000
}
fn default_step_scale() -> f64 {
    1.0
}
fn default_ratio() -> f64 {
    0.01
}
fn default_n_lambda() -> usize {
    10
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_eps_stop")]
    pub eps_stop: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Steplength as a fraction of `1/L_g`.
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub path: Option<PathSpec>,
    /// Directory that relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Lasso(RegressionSpec),
    Logistic(RegressionSpec),
    MatrixCompletion(CompletionSpec),
    BoxQp(QpSpec),
}

/// Lasso or logistic data: generated unless both `design` and `response`
/// are given.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub p: usize,
    #[serde(default)]
    pub rho: f64,
    pub sparsity: Option<f64>,
    pub design: Option<PathBuf>,
    pub response: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub lambda_frac: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CompletionSpec {
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub p: usize,
    pub rank: Option<usize>,
    pub observed_frac: Option<f64>,
    pub noise_sd: Option<f64>,
    /// Tab-separated `user item rating [timestamp]` file.
    pub ratings: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub lambda_frac: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QpSpec {
    pub p: usize,
    pub cond: f64,
    pub noise_sd: Option<f64>,
}

/// Regularization path: either an explicit decreasing `lambdas` list or a
/// log grid `lambda_1 * ratio^(j/(n_lambda-1))` where `lambda_1` defaults to
/// the smallest penalty with an all-zero solution.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub lambdas: Option<Vec<f64>>,
    #[serde(default = "default_n_lambda")]
    pub n_lambda: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    pub lambda_1: Option<f64>,
    /// Also solve every grid point from zero for comparison.
    #[serde(default = "default_true")]
    pub compare_cold: bool,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Pgd,
    Nesterov,
    NesterovRestart,
    AaRestart,
    Daarem,
    Nidaarem,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Pgd => "pgd",
            MethodKind::Nesterov => "nesterov",
            MethodKind::NesterovRestart => "nesterov_restart",
            MethodKind::AaRestart => "aa_restart",
            MethodKind::Daarem => "daarem",
            MethodKind::Nidaarem => "nidaarem",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pgd" => MethodKind::Pgd,
            "nesterov" => MethodKind::Nesterov,
            "nesterov_restart" => MethodKind::NesterovRestart,
            "aa_restart" => MethodKind::AaRestart,
            "daarem" => MethodKind::Daarem,
            "nidaarem" => MethodKind::Nidaarem,
            _ => return None,
        })
    }

    fn uses_daarem(self) -> bool {
        matches!(self, MethodKind::Daarem | MethodKind::Nidaarem)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MonitorName {
    Fixed,
    Alternating,
    Residual,
}

impl From<MonitorName> for Monitor {
    fn from(m: MonitorName) -> Self {
        match m {
            MonitorName::Fixed => Monitor::Fixed,
            MonitorName::Alternating => Monitor::Alternating,
            MonitorName::Residual => Monitor::Residual,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CriterionName {
    Monotonicity,
    Gradient,
}

impl From<CriterionName> for RestartCriterion {
    fn from(c: CriterionName) -> Self {
        match c {
            CriterionName::Monotonicity => RestartCriterion::Monotonicity,
            CriterionName::Gradient => RestartCriterion::Gradient,
        }
    }
}

/// One solver configuration. Unset fields take the library defaults.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub label: Option<String>,
    pub kind: MethodKind,
    pub monitor: Option<MonitorName>,
    pub m: Option<usize>,
    pub subset: Option<bool>,
    /// Restart test for `nesterov_restart`, switch test for `nidaarem`.
    pub criterion: Option<CriterionName>,
    pub n_s: Option<usize>,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub d_floor: Option<i64>,
    pub rho_star: Option<f64>,
    pub eps_c: Option<f64>,
    pub subset_scale: Option<f64>,
    pub resid_rho: Option<f64>,
    pub resid_k: Option<f64>,
    pub resid_gamma: Option<f64>,
}

impl MethodSpec {
    pub fn new(kind: MethodKind) -> Self {
        Self {
            label: None,
            kind,
            monitor: None,
            m: None,
            subset: None,
            criterion: None,
            n_s: None,
            eps: None,
            alpha: None,
            kappa: None,
            d_floor: None,
            rho_star: None,
            eps_c: None,
            subset_scale: None,
            resid_rho: None,
            resid_k: None,
            resid_gamma: None,
        }
    }

    /// Parses a method name such as `pgd`, `nesterov_restart_grad`,
    /// `daarem_fm` or `snidaarem_am` (leading `s` = subsetted; suffix
    /// `_fm`/`_am`/`_rm` = fixed/alternating/residual monitor).
    pub fn from_name(name: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("unknown method name `{name}`"));
        let mut rest = name;
        let mut criterion = None;
        if let Some(r) = rest.strip_suffix("_grad") {
            rest = r;
            criterion = Some(CriterionName::Gradient);
        }
        let mut monitor = None;
        for (suffix, mon) in [("_fm", MonitorName::Fixed), ("_am", MonitorName::Alternating), ("_rm", MonitorName::Residual)] {
            if let Some(r) = rest.strip_suffix(suffix) {
                rest = r;
                monitor = Some(mon);
                break;
            }
        }
        let mut subset = None;
        if let Some(r) = rest.strip_prefix('s') {
            if matches!(r, "daarem" | "nidaarem") {
                rest = r;
                subset = Some(true);
            }
        }
        let kind = MethodKind::parse(rest).ok_or_else(bad)?;
        if (monitor.is_some() || subset.is_some()) && !kind.uses_daarem() {
            return Err(bad());
        }
        if criterion.is_some() && !matches!(kind, MethodKind::NesterovRestart | MethodKind::Nidaarem) {
            return Err(bad());
        }
        let mut spec = MethodSpec::new(kind);
        spec.monitor = monitor;
        spec.subset = subset;
        spec.criterion = criterion;
        Ok(spec)
    }

    /// Explicit label, or the canonical name that [`MethodSpec::from_name`]
    /// parses back.
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut s = String::new();
        if self.kind.uses_daarem() && self.subset.unwrap_or(false) {
            s.push('s');
        }
        s.push_str(self.kind.as_str());
        if self.kind.uses_daarem() {
            s.push_str(match self.monitor.unwrap_or(MonitorName::Alternating) {
                MonitorName::Fixed => "_fm",
                MonitorName::Alternating => "_am",
                MonitorName::Residual => "_rm",
            });
        }
        if self.criterion == Some(CriterionName::Gradient) {
            s.push_str("_grad");
        }
        s
    }

    pub fn restart_criterion(&self) -> RestartCriterion {
        self.criterion.unwrap_or(CriterionName::Monotonicity).into()
    }

    pub fn switch_cap(&self) -> usize {
        self.n_s.unwrap_or(proxaccel::solvers::DEFAULT_SWITCH_CAP)
    }

    pub fn window(&self) -> usize {
        self.m.unwrap_or(DaaremConfig::default().m)
    }

    pub fn daarem_config(&self) -> DaaremConfig {
        let mut c = DaaremConfig::default();
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.monitor {
            c.monitor = v.into();
        }
        if let Some(v) = self.subset {
            c.subset_enabled = v;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(eps, alpha, kappa, d_floor, rho_star, eps_c, subset_scale, resid_rho, resid_k, resid_gamma);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let label = self.label();
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(CliError::Config(format!(
                "method label `{label}` must be non-empty and use only [A-Za-z0-9_.-]"
            )));
        }
        let daarem_only = self.monitor.is_some()
            || self.subset.is_some()
            || self.eps.is_some()
            || self.alpha.is_some()
            || self.kappa.is_some()
            || self.d_floor.is_some()
            || self.rho_star.is_some()
            || self.eps_c.is_some()
            || self.subset_scale.is_some()
            || self.resid_rho.is_some()
            || self.resid_k.is_some()
            || self.resid_gamma.is_some();
        if daarem_only && !self.kind.uses_daarem() {
            return Err(CliError::Config(format!("{label}: DAAREM options given for a {} method", self.kind.as_str())));
        }
        if self.m.is_some() && !matches!(self.kind, MethodKind::AaRestart | MethodKind::Daarem | MethodKind::Nidaarem) {
            return Err(CliError::Config(format!("{label}: `m` does not apply to {}", self.kind.as_str())));
        }
        if self.criterion.is_some() && !matches!(self.kind, MethodKind::NesterovRestart | MethodKind::Nidaarem) {
            return Err(CliError::Config(format!("{label}: `criterion` does not apply to {}", self.kind.as_str())));
        }
        if self.n_s.is_some() && self.kind != MethodKind::Nidaarem {
            return Err(CliError::Config(format!("{label}: `n_s` only applies to nidaarem")));
        }
        if self.n_s == Some(0) {
            return Err(CliError::Config(format!("{label}: n_s must be at least 1")));
        }
        if self.window() == 0 {
            return Err(CliError::Config(format!("{label}: m must be at least 1")));
        }
        if self.kind.uses_daarem() {
            self.daarem_config()
                .validate()
                .map_err(|e| CliError::Config(format!("{label}: {e}")))?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(CliError::Config("at least one [[methods]] entry is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(CliError::Config(format!("seed {s} listed twice")));
        }
        let mut labels = HashSet::new();
        for m in &self.methods {
            m.validate()?;
            if !labels.insert(m.label()) {
                return Err(CliError::Config(format!("method label `{}` used twice", m.label())));
            }
        }
        if !(self.eps_stop > 0.0 && self.eps_stop.is_finite()) {
            return Err(CliError::Config(format!("eps_stop must be positive, got {}", self.eps_stop)));
        }
        if self.max_iter == 0 {
            return Err(CliError::Config("max_iter must be at least 1".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(CliError::Config(format!("step_scale must lie in (0, 1], got {}", self.step_scale)));
        }
        self.validate_problem()?;
        if let Some(path) = &self.path {
            path.validate()?;
        }
        Ok(())
    }

    fn validate_problem(&self) -> Result<()> {
        let exists = |p: &Option<PathBuf>| -> Result<()> {
            if let Some(p) = p {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(CliError::Config(format!("data file {} does not exist", full.display())));
                }
            }
            Ok(())
        };
        let penalty = |lambda: Option<f64>, frac: Option<f64>| -> Result<()> {
            if lambda.is_some() && frac.is_some() {
                return Err(CliError::Config("give either lambda or lambda_frac, not both".into()));
            }
            if let Some(v) = lambda.or(frac) {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("penalty must be non-negative, got {v}")));
                }
            }
            Ok(())
        };
        match &self.problem {
            ProblemSpec::Lasso(r) | ProblemSpec::Logistic(r) => {
                penalty(r.lambda, r.lambda_frac)?;
                match (&r.design, &r.response) {
                    (Some(_), Some(_)) => {
                        exists(&r.design)?;
                        exists(&r.response)?;
                    }
                    (None, None) => {
                        if r.n == 0 || r.p == 0 {
                            return Err(CliError::Config("generated problems need n >= 1 and p >= 1".into()));
                        }
                    }
                    _ => return Err(CliError::Config("design and response must be given together".into())),
                }
            }
            ProblemSpec::MatrixCompletion(c) => {
                penalty(c.lambda, c.lambda_frac)?;
                if c.ratings.is_some() {
                    exists(&c.ratings)?;
                } else if c.n == 0 || c.p == 0 {
                    return Err(CliError::Config("generated problems need n >= 1 and p >= 1".into()));
                }
            }
            ProblemSpec::BoxQp(q) => {
                if q.p == 0 || !(q.cond >= 1.0) {
                    return Err(CliError::Config(format!("box_qp needs p >= 1 and cond >= 1, got p={} cond={}", q.p, q.cond)));
                }
            }
        }
        Ok(())
    }
}

impl PathSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = &self.lambdas {
            check_decreasing(l)?;
        } else {
            if self.n_lambda == 0 {
                return Err(CliError::Config("n_lambda must be at least 1".into()));
            }
            if !(self.ratio > 0.0 && self.ratio < 1.0) {
                return Err(CliError::Config(format!("path ratio must lie in (0, 1), got {}", self.ratio)));
            }
        }
        Ok(())
    }

    /// Grid for a given zero-solution penalty.
    pub fn grid(&self, lambda_zero: f64) -> Result<Vec<f64>> {
        if let Some(l) = &self.lambdas {
            check_decreasing(l)?;
            return Ok(l.clone());
        }
        let l1 = self.lambda_1.unwrap_or(lambda_zero);
        let grid = if self.n_lambda == 1 {
            vec![l1]
        } else {
            let last = (self.n_lambda - 1) as f64;
            (0..self.n_lambda).map(|j| l1 * self.ratio.powf(j as f64 / last)).collect()
        };
        check_decreasing(&grid)?;
        Ok(grid)
    }
}

/// Rejects empty, non-finite, negative or not strictly decreasing sequences.
pub fn check_decreasing(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(CliError::Config("empty lambda sequence".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(CliError::Config(format!("lambda values must be finite and non-negative, got {l}")));
    }
    if let Some(w) = lambdas.windows(2).find(|w| w[1] >= w[0]) {
        return Err(CliError::Config(format!(
            "lambda sequence must be strictly decreasing, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}
