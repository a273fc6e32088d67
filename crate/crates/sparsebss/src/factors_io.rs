//! Plain-text dump of source factors.
//!
//! ```text
//! sparsebss-factors 1
//! sources <N>
//! W <n> <rows> <cols>
//! <row-major values, one matrix row per line>
//! H <n> <rows> <cols>
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so reading
//! a dump back is exact.

use std::fmt::Write as _;
use std::path::Path;

use sparsebss_core::{Matrix, SourceFactors};

use crate::error::{Error, Result};

const MAGIC: &str = "sparsebss-factors 1";

fn write_matrix(out: &mut String, tag: char, n: usize, m: &Matrix) {
    let _ = writeln!(out, "{tag} {n} {} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

pub fn factors_to_string(f: &SourceFactors) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "sources {}", f.sources());
    for n in 0..f.sources() {
        write_matrix(&mut out, 'W', n, &f.bases[n]);
        write_matrix(&mut out, 'H', n, &f.activations[n]);
    }
    out
}

pub fn write_factors(path: impl AsRef<Path>, f: &SourceFactors) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, factors_to_string(f)).map_err(|e| Error::io(path, e))
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        path: "<factors>".into(),
        message: msg.into(),
    }
}

pub fn factors_from_str(text: &str) -> Result<SourceFactors> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(parse_err("missing factor dump header"));
    }
    let count: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("sources "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| parse_err("missing source count"))?;
    let mut read_matrix = |tag: &str, n: usize| -> Result<Matrix> {
        let header = lines.next().ok_or_else(|| parse_err("truncated dump"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let dims = match fields.as_slice() {
            [t, idx, r, c] if *t == tag && idx.parse() == Ok(n) => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
            _ => None,
        };
        let (rows, cols) = dims.ok_or_else(|| parse_err(format!("expected `{tag} {n} <rows> <cols>`, got `{header}`")))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines.next().ok_or_else(|| parse_err("truncated matrix"))?;
            for v in line.split_whitespace() {
                data.push(v.parse::<f64>().map_err(|_| parse_err(format!("bad number `{v}`")))?);
            }
        }
        Ok(Matrix::from_row_major(rows, cols, data)?)
    };
    let mut bases = Vec::with_capacity(count);
    let mut activations = Vec::with_capacity(count);
    for n in 0..count {
        bases.push(read_matrix("W", n)?);
        activations.push(read_matrix("H", n)?);
    }
    Ok(SourceFactors::new(bases, activations)?)
}

pub fn read_factors(path: impl AsRef<Path>) -> Result<SourceFactors> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    factors_from_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}
