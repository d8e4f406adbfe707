// SPDX-License-Identifier: MIT OR Apache-2.0

//! Background spectrum files.
//!
//! CSV with a `bin,weight` or `bin,count` header and one row per channel,
//! bins numbered consecutively from 0 or 1. Values are normalised on load.

use std::io::Read;
use std::path::Path;

use ksdetect::{Density, SpectrumCdf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("{path}: {source}")]
    Io { path: String, source: IoMessage },
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    #[error("{0}")]
    File(String),
}

/// `std::io::Error` flattened to its message so errors stay comparable.
#[derive(Debug, Error, PartialEq)]
#[error("{0}")]
pub struct IoMessage(String);

/// Folds channels beyond `at` into channel `at` (1-based), leaving shorter
/// vectors untouched.
pub fn winsorize<T: Copy + std::iter::Sum<T>>(values: &[T], at: usize) -> Vec<T> {
    if at == 0 || values.len() <= at {
        return values.to_vec();
    }
    let mut out = values[..at].to_vec();
    out[at - 1] = values[at - 1..].iter().copied().sum();
    out
}

/// Parses a spectrum from CSV text, optionally winsorized at channel `at`.
pub fn parse_spectrum<R: Read>(
    reader: R,
    winsorize_at: Option<usize>,
) -> Result<(SpectrumCdf, Density), SpectrumError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| SpectrumError::Line { line: 1, message: e.to_string() })?.clone();
    let columns: Vec<&str> = headers.iter().collect();
    if columns != ["bin", "weight"] && columns != ["bin", "count"] {
        return Err(SpectrumError::Line {
            line: 1,
            message: format!("header must be `bin,weight` or `bin,count`, found `{}`", columns.join(",")),
        });
    }
    let mut weights = Vec::new();
    let mut first_bin = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            SpectrumError::Line { line, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| SpectrumError::Line { line, message };
        if record.len() != 2 {
            return Err(bad(format!("expected 2 fields, found {}", record.len())));
        }
        let bin: u64 =
            record[0].parse().map_err(|_| bad(format!("bin `{}` is not a non-negative integer", &record[0])))?;
        let w: f64 = record[1].parse().map_err(|_| bad(format!("value `{}` is not a number", &record[1])))?;
        if !w.is_finite() || w < 0.0 {
            return Err(bad(format!("value {w} is negative or not finite")));
        }
        let start = *first_bin.get_or_insert(bin);
        if start > 1 {
            return Err(bad(format!("bins must start at 0 or 1, found {bin}")));
        }
        if bin != start + weights.len() as u64 {
            return Err(bad(format!("expected bin {}, found {bin}", start + weights.len() as u64)));
        }
        weights.push(w);
    }
    if weights.is_empty() {
        return Err(SpectrumError::File("spectrum has no rows".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(SpectrumError::File("spectrum total is zero".into()));
    }
    if let Some(at) = winsorize_at {
        if at == 0 {
            return Err(SpectrumError::File("winsorize cutoff must be at least 1".into()));
        }
        weights = winsorize(&weights, at);
    }
    let cdf = SpectrumCdf::from_weights(&weights).map_err(|e| SpectrumError::File(e.to_string()))?;
    let density = Density::new(cdf.weights()).map_err(|e| SpectrumError::File(e.to_string()))?;
    Ok((cdf, density))
}

pub fn ingest_spectrum(path: &Path, winsorize_at: Option<usize>) -> Result<(SpectrumCdf, Density), SpectrumError> {
    let file = std::fs::File::open(path)
        .map_err(|e| SpectrumError::Io { path: path.display().to_string(), source: IoMessage(e.to_string()) })?;
    parse_spectrum(std::io::BufReader::new(file), winsorize_at)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bin_counts() {
        let (cdf, d) = parse_spectrum("bin,count\n1,50\n2,50\n".as_bytes(), None).unwrap();
        assert_eq!(cdf.values(), &[0.5, 1.0]);
        assert_eq!(d.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn winsorizes_upper_channels() {
        let mut text = String::from("bin,weight\n");
        for b in 1..=4096 {
            text.push_str(&format!("{b},1\n"));
        }
        let (cdf, d) = parse_spectrum(text.as_bytes(), Some(2048)).unwrap();
        assert_eq!(cdf.bin_count(), 2048);
        assert!((d.weights()[2047] - 2049.0 / 4096.0).abs() < 1e-12);
        assert_eq!(winsorize(&[1u64, 2, 3, 4], 2), vec![1, 9]);
        assert_eq!(winsorize(&[1u64, 2], 5), vec![1, 2]);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "bin,count\n1,3\n2,3\n3,3\n4,3\n5,3\n6,x\n7,3\n";
        let e = parse_spectrum(text.as_bytes(), None).unwrap_err();
        assert_eq!(e.to_string(), "line 7: value `x` is not a number");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(parse_spectrum("bin,count\n1,-1\n".as_bytes(), None).unwrap_err().to_string().starts_with("line 2"));
        assert!(matches!(parse_spectrum("bin,count\n1,0\n2,0\n".as_bytes(), None), Err(SpectrumError::File(_))));
        assert!(parse_spectrum("channel,count\n1,1\n".as_bytes(), None).unwrap_err().to_string().starts_with("line 1"));
        assert!(parse_spectrum("bin,count\n1,1\n3,1\n".as_bytes(), None).is_err());
        assert!(parse_spectrum("bin,count\n".as_bytes(), None).is_err());
    }
}
