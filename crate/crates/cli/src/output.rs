//! CSV emission. Every number goes through [`fmt_num`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use proxaccel::RunReport;

use crate::error::{CliError, Result};

pub const TRACE_HEADER: &str = "iter,objective,resid_norm,pg_steps,step_kind";

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 <= |x| < 1e12`.
pub fn fmt_num(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // the exponent after rounding to P digits decides the notation
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trace_csv(report: &RunReport) -> String {
    let mut s = String::with_capacity(64 * (report.trace.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &report.trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.iter,
            fmt_num(r.objective),
            fmt_num(r.resid_norm),
            r.pg_steps,
            r.step_kind
        );
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Joins already-formatted fields into CSV text with a header line.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Replaces separators so free text fits in one CSV field.
pub fn csv_field(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}
