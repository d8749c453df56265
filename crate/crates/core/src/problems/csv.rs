use std::io::Read;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Reads a rectangular numeric CSV table. The first row is treated as a
/// header when any of its cells fails to parse as a number. Every column
/// other than `target` is standardized to zero mean and unit variance
/// (population variance); constant columns become all zeros.
pub fn parse_csv_numeric(reader: impl Read, target: usize) -> Result<Dataset> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => {
                let bad = rec.iter().find(|c| c.parse::<f64>().is_err()).unwrap_or("");
                return Err(Error::Parse {
                    line,
                    message: format!("non-numeric cell '{bad}'"),
                });
            }
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} cells, found {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(values);
    }

    let w = width.unwrap_or(0);
    if !rows.is_empty() && target >= w {
        return Err(Error::InvalidParameter(format!(
            "target column {target} out of range for {w} columns"
        )));
    }
    let m = rows.len();
    let k = w.saturating_sub(1);
    let labels: Vec<f64> = rows.iter().map(|r| r[target]).collect();
    let mut features = Matrix::zeros(m, k);
    let mut j_out = 0;
    for j in (0..w).filter(|&j| j != target) {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / m as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
        let sd = var.sqrt();
        let constant = sd <= 1e-12 * mean.abs().max(1.0);
        for (i, v) in col.iter().enumerate() {
            features[(i, j_out)] = if constant { 0.0 } else { (v - mean) / sd };
        }
        j_out += 1;
    }
    Ok(Dataset {
        features,
        labels: Vector::new(labels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_with_header() {
        let d = parse_csv_numeric("a,b,y\n1,2,3\n4,6,7\n".as_bytes(), 2).unwrap();
        assert_eq!(d.features.shape(), (2, 2));
        assert_eq!(d.labels.as_slice(), &[3.0, 7.0]);
        assert_eq!(d.features.column(0).as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_zeroed() {
        let d = parse_csv_numeric("5,1,0\n5,2,0\n5,4,1\n".as_bytes(), 2).unwrap();
        assert_eq!(d.features.column(0).as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn ragged_and_non_numeric_rejected() {
        assert!(matches!(
            parse_csv_numeric("1,2\n1,2,3\n".as_bytes(), 0),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv_numeric("1,2\n1,x\n".as_bytes(), 0),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn standardization_invariants() {
        let text: String = (0..50)
            .map(|i| format!("{},{},{}\n", i as f64 * 0.3, (i * i) as f64, i % 7))
            .collect();
        let d = parse_csv_numeric(text.as_bytes(), 1).unwrap();
        for j in 0..2 {
            let c = d.features.column(j);
            let mean = c.iter().sum::<f64>() / 50.0;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-10 && (var - 1.0).abs() < 1e-10);
        }
    }
}
