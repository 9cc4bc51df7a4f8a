//! Matrix Market input/output and plain-text vectors.
//!
//! Supported headers: `matrix coordinate {real,integer,pattern} general` and
//! `matrix array {real,integer} general`. Coordinate files load as sparse
//! matrices (duplicates summed), array files as dense ones.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_market(path: &Path) -> Result<Matrix> {
    parse_matrix_market(&read_text(path)?, path)
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, origin: &Path, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(origin, line, format!("expected {what}")))
}

pub fn parse_matrix_market(text: &str, origin: &Path) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" {
        return Err(Error::parse(origin, 1, "missing %%MatrixMarket header"));
    }
    if fields[1] != "matrix" {
        return Err(Error::UnsupportedQualifier(fields[1].clone()));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::UnsupportedQualifier(other.to_string())),
    };
    let pattern = match fields[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(Error::UnsupportedQualifier(other.to_string())),
    };
    if fields[4] != "general" {
        return Err(Error::UnsupportedQualifier(fields[4].clone()));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| Error::parse(origin, 2, "missing size line"))?;
    let mut tok = size.split_whitespace();
    let m: usize = parse_num(tok.next(), origin, size_line, "row count")?;
    let n: usize = parse_num(tok.next(), origin, size_line, "column count")?;

    if coordinate {
        let nnz: usize = parse_num(tok.next(), origin, size_line, "entry count")?;
        let mut triplets = Vec::with_capacity(nnz);
        for (ln, l) in body.by_ref().take(nnz) {
            let mut tok = l.split_whitespace();
            let i: usize = parse_num(tok.next(), origin, ln, "row index")?;
            let j: usize = parse_num(tok.next(), origin, ln, "column index")?;
            if i == 0 || j == 0 || i > m || j > n {
                return Err(Error::parse(origin, ln, format!("index ({i}, {j}) outside {m}x{n}")));
            }
            let v: f64 = if pattern { 1.0 } else { parse_num(tok.next(), origin, ln, "value")? };
            triplets.push((i - 1, j - 1, v));
        }
        if triplets.len() != nnz {
            return Err(Error::parse(origin, size_line, format!("expected {nnz} entries, found {}", triplets.len())));
        }
        Matrix::sparse_from_triplets(m, n, &triplets)
    } else {
        // column-major values
        let mut data = vec![0.0; m * n];
        let mut count = 0;
        for (ln, l) in body {
            if count == m * n {
                return Err(Error::parse(origin, ln, "too many values"));
            }
            let v: f64 = parse_num(l.split_whitespace().next(), origin, ln, "value")?;
            let (i, j) = (count % m, count / m);
            data[i * n + j] = v;
            count += 1;
        }
        if count != m * n {
            return Err(Error::parse(origin, size_line, format!("expected {} values, found {count}", m * n)));
        }
        Matrix::dense(m, n, data)
    }
}

/// Coordinate format for sparse matrices, array format for dense ones.
pub fn format_matrix_market(a: &Matrix) -> String {
    let mut out = String::new();
    let (m, n) = (a.nrows(), a.ncols());
    match a {
        Matrix::Sparse(s) => {
            writeln!(out, "%%MatrixMarket matrix coordinate real general").unwrap();
            writeln!(out, "{m} {n} {}", s.nnz()).unwrap();
            for (i, j, v) in s.triplets() {
                writeln!(out, "{} {} {v:e}", i + 1, j + 1).unwrap();
            }
        }
        Matrix::Dense(_) => {
            writeln!(out, "%%MatrixMarket matrix array real general").unwrap();
            writeln!(out, "{m} {n}").unwrap();
            for j in 0..n {
                for i in 0..m {
                    writeln!(out, "{:e}", a.get(i, j)).unwrap();
                }
            }
        }
    }
    out
}

pub fn write_matrix_market(a: &Matrix, path: &Path) -> Result<()> {
    fs::write(path, format_matrix_market(a)).map_err(|e| Error::io(path, e))
}

pub fn parse_vector(text: &str, origin: &Path) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(origin, i + 1, format!("not a number: {:?}", l.trim())))
        })
        .collect()
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&read_text(path)?, path)
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(24 * v.len());
    for x in v {
        writeln!(out, "{x:e}").unwrap();
    }
    out
}

pub fn write_vector(v: &[f64], path: &Path) -> Result<()> {
    fs::write(path, format_vector(v)).map_err(|e| Error::io(path, e))
}
