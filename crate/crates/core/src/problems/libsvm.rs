//! LIBSVM sparse text format: `label (' ' index ':' value)*` per line,
//! 1-based strictly increasing indices.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a LIBSVM stream into a dense dataset sized by the largest index.
///
/// Labels already in `{0, 1}` are kept; any other label set is mapped to
/// `0, 1, …` in ascending order (so `±1` and `{1, 2}` both become `{0, 1}`).
pub fn parse_libsvm(reader: impl BufRead) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };
        let label: f64 = first
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label '{first}'")))?;
        let mut row = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index in '{tok}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value in '{tok}'")))?;
            if idx == 0 || idx <= last {
                return Err(parse_err(
                    lineno,
                    format!("index {idx} is not strictly increasing (previous {last})"),
                ));
            }
            last = idx;
            row.push((idx, val));
        }
        width = width.max(last);
        labels.push(label);
        entries.push(row);
    }

    let mut features = Matrix::zeros(entries.len(), width);
    for (r, row) in entries.iter().enumerate() {
        for &(idx, val) in row {
            features[(r, idx - 1)] = val;
        }
    }
    Ok(Dataset {
        features,
        labels: Vector::new(remap_labels(labels)),
    })
}

fn remap_labels(labels: Vec<f64>) -> Vec<f64> {
    if labels.iter().all(|&l| l == 0.0 || l == 1.0) {
        return labels;
    }
    let distinct: BTreeSet<u64> = labels.iter().map(|l| ordered_bits(*l)).collect();
    let sorted: Vec<u64> = distinct.into_iter().collect();
    labels
        .iter()
        .map(|l| sorted.binary_search(&ordered_bits(*l)).unwrap() as f64)
        .collect()
}

// Bit pattern whose unsigned order matches the float order.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Writes `data` in LIBSVM format, skipping zeros except the last column
/// (kept so the width survives a round trip).
pub fn serialize_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    let w = data.cols();
    for r in 0..data.rows() {
        write!(out, "{}", data.labels[r]).unwrap();
        for (j, v) in data.features.row(r).iter().enumerate() {
            if *v != 0.0 || j + 1 == w {
                write!(out, " {}:{}", j + 1, v).unwrap();
            }
        }
        out.push('\n');
    }
    out
}
