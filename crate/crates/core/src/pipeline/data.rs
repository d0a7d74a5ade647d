//! CSV ingestion and feature preprocessing.

use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::trees::SimilarityMatrix;

/// Numeric table read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl Features {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

fn parse_error(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message,
    }
}

/// Reads a rectangular numeric CSV. The first row is treated as a header
/// when any of its cells is not a number.
pub fn read_numeric_csv(path: &Path) -> Result<Features> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if line == 0 && parsed.iter().any(Option::is_none) {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (col, v) in parsed.into_iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(parse_error(
                        path,
                        format!(
                            "line {}, column {}: `{}` is not a finite number",
                            line + 1,
                            col + 1,
                            &record[col]
                        ),
                    ));
                }
            }
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_error(
                    path,
                    format!(
                        "line {} has {} cells, expected {}",
                        line + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    Ok(Features { header, rows })
}

/// Loads a feature matrix (one row per item, at least three rows).
pub fn load_features(path: &Path) -> Result<Features> {
    let f = read_numeric_csv(path)?;
    if f.n_rows() < 3 {
        return Err(parse_error(
            path,
            format!("need at least 3 rows, found {}", f.n_rows()),
        ));
    }
    Ok(f)
}

/// Centers every column and scales it to unit (population) standard
/// deviation. Constant columns are dropped; their indices are returned.
pub fn standardize(features: &Features) -> (Features, Vec<usize>) {
    let n = features.n_rows();
    let d = features.n_cols();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    let mut stats = Vec::new();
    for c in 0..d {
        let mean = features.rows.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = features
            .rows
            .iter()
            .map(|r| (r[c] - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        let sd = var.sqrt();
        if sd > 1e-12 * (1.0 + mean.abs()) {
            keep.push(c);
            stats.push((mean, sd));
        } else {
            dropped.push(c);
        }
    }
    if !dropped.is_empty() {
        let names: Vec<String> = dropped
            .iter()
            .map(|&c| {
                features
                    .header
                    .as_ref()
                    .map_or_else(|| c.to_string(), |h| h[c].clone())
            })
            .collect();
        warn!("dropping constant columns: {}", names.join(", "));
    }
    let rows = features
        .rows
        .iter()
        .map(|r| {
            keep.iter()
                .zip(&stats)
                .map(|(&c, &(m, s))| (r[c] - m) / s)
                .collect()
        })
        .collect();
    let header = features
        .header
        .as_ref()
        .map(|h| keep.iter().map(|&c| h[c].clone()).collect());
    (Features { header, rows }, dropped)
}

/// Cosine similarity of the rows, with a zero diagonal. Rows of zero norm
/// get similarity zero to everything.
pub fn cosine_similarity(features: &Features) -> SimilarityMatrix<f64> {
    let norms: Vec<f64> = features
        .rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let zero_rows = norms.iter().filter(|&&v| v == 0.0).count();
    if zero_rows > 0 {
        warn!("{zero_rows} rows have zero norm; their similarities are set to 0");
    }
    let rows = &features.rows;
    SimilarityMatrix::from_fn(rows.len(), |i, j| {
        if norms[i] == 0.0 || norms[j] == 0.0 {
            return 0.0;
        }
        let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
        (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
    })
}

/// `(1 + cos) / 2`: cosine similarity moved into `[0, 1]`, zero diagonal.
pub fn shifted_cosine_similarity(features: &Features) -> SimilarityMatrix<f64> {
    let c = cosine_similarity(features);
    SimilarityMatrix::from_fn(c.n(), |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * (1.0 + c.get(i, j))
        }
    })
}

/// Tolerance below which an input similarity matrix counts as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Reads a square similarity matrix; mildly asymmetric input is averaged
/// with its transpose (with a warning).
pub fn load_similarity(path: &Path) -> Result<SimilarityMatrix<f64>> {
    let f = read_numeric_csv(path)?;
    let n = f.n_rows();
    if n < 3 {
        return Err(parse_error(
            path,
            format!("need at least 3 rows, found {n}"),
        ));
    }
    if f.n_cols() != n {
        return Err(parse_error(
            path,
            format!("similarity matrix must be square, got {}x{}", n, f.n_cols()),
        ));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((f.rows[i][j] - f.rows[j][i]).abs());
        }
    }
    let flat: Vec<f64> = f.rows.into_iter().flatten().collect();
    if worst > SYMMETRY_TOL {
        warn!("similarity matrix is asymmetric by up to {worst:e}; averaging with its transpose");
    }
    SimilarityMatrix::symmetrized(n, flat)
}

/// Reads one label per row from a single-column CSV (optional header) and
/// maps distinct labels to class ids in order of first appearance.
pub fn load_labels(path: &Path) -> Result<(Vec<usize>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 1 {
            return Err(parse_error(
                path,
                format!("expected one column, found {}", record.len()),
            ));
        }
        raw.push(record[0].to_string());
    }
    Ok(index_labels(raw))
}

fn index_labels(mut raw: Vec<String>) -> (Vec<usize>, Vec<String>) {
    // a first line that matches no later label and is not numeric while
    // later labels are, or that reads like a column name, is a header
    if raw.len() > 1 {
        let first = &raw[0];
        let numeric_rest = raw[1..].iter().all(|s| s.parse::<f64>().is_ok());
        let repeated = raw[1..].contains(first);
        if (numeric_rest && first.parse::<f64>().is_err())
            || (!repeated
                && matches!(
                    first.to_lowercase().as_str(),
                    "label" | "labels" | "class" | "type" | "y"
                ))
        {
            raw.remove(0);
        }
    }
    let mut classes: Vec<String> = Vec::new();
    let ids = raw
        .into_iter()
        .map(|s| match classes.iter().position(|c| *c == s) {
            Some(i) => i,
            None => {
                classes.push(s);
                classes.len() - 1
            }
        })
        .collect();
    (ids, classes)
}

/// Reads one name per row from a single-column CSV whose first line is a
/// header. Repeated names get a `_2`, `_3`, ... suffix so that every leaf
/// can be told apart in Newick output.
pub fn load_names(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut raw = Vec::new();
    for record in reader.records() {
        raw.push(record?.get(0).unwrap_or_default().to_string());
    }
    Ok(unique_names(raw))
}

fn unique_names(raw: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for name in raw {
        let mut candidate = name.clone();
        let mut k = 1;
        while !seen.insert(candidate.clone()) {
            k += 1;
            candidate = format!("{name}_{k}");
        }
        if k > 1 {
            warn!("repeated name `{name}` renamed to `{candidate}`");
        }
        out.push(candidate);
    }
    out
}
