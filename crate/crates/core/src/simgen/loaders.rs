use std::collections::HashSet;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problems::MatrixCompletionProblem;

/// Reads `user<TAB>item<TAB>rating[<TAB>timestamp]` lines with 1-based ids.
/// The matrix shape is the largest user id by the largest item id; the
/// penalty starts at zero (set it with `with_lambda`).
pub fn load_ratings(path: impl AsRef<Path>) -> Result<MatrixCompletionProblem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let (mut n, mut p) = (0usize, 0usize);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(parse_err(line, format!("expected 3 or 4 tab-separated fields, got {}", fields.len())));
        }
        let id = |s: &str, what: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(parse_err(line, format!("{what} id {s:?} is not a positive integer"))),
            }
        };
        let (user, item) = (id(fields[0], "user")?, id(fields[1], "item")?);
        let rating: f64 = fields[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("rating {:?} is not a finite number", fields[2])))?;
        if !seen.insert((user, item)) {
            return Err(Error::DuplicateEntry { row: user, col: item });
        }
        n = n.max(user + 1);
        p = p.max(item + 1);
        entries.push((user, item, rating));
    }
    if entries.is_empty() {
        return Err(Error::BadInput {
            path: path.to_path_buf(),
            msg: "no observations".into(),
        });
    }
    MatrixCompletionProblem::new(n, p, entries, 0.0)
}

fn parse_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let row = raw
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("field {s:?} is not numeric"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("expected {} fields, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::BadInput {
            path: path.to_path_buf(),
            msg: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// Reads a dense design and response from comma- or whitespace-delimited
/// text. The response file holds one value per line (or a single row).
pub fn load_design(path_x: impl AsRef<Path>, path_y: impl AsRef<Path>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (path_x, path_y) = (path_x.as_ref(), path_y.as_ref());
    let rows = parse_rows(path_x)?;
    let (n, p) = (rows.len(), rows[0].len());
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let ys: Vec<f64> = parse_rows(path_y)?.into_iter().flatten().collect();
    if ys.len() != n {
        return Err(Error::BadInput {
            path: path_y.to_path_buf(),
            msg: format!("response has {} values but design has {n} rows", ys.len()),
        });
    }
    Ok((x, DVector::from_vec(ys)))
}
