//! Small shared helpers for CSV reading and writing.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! loaded back from any table this crate writes is bit-identical to the one
//! written — the exact-round-trip guarantees elsewhere rest on this.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest decimal form that parses back to the identical f64.
pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Lower-cased, trimmed header cells.
pub(crate) fn headers_lower(reader: &mut csv::Reader<File>, path: &Path) -> Result<Vec<String>> {
    let headers = reader.headers().map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(headers
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect())
}

/// Parse a finite float; empty or malformed cells give `None`.
pub(crate) fn parse_f64(cell: &str) -> Option<f64> {
    let v: f64 = cell.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parse a non-negative integer count, tolerating a float spelling like
/// `"3.0"` as long as it is integral.
pub(crate) fn parse_u64(cell: &str) -> Option<u64> {
    let cell = cell.trim();
    if let Ok(v) = cell.parse::<u64>() {
        return Some(v);
    }
    let v = parse_f64(cell)?;
    (v >= 0.0 && v <= u64::MAX as f64 && v.fract() == 0.0).then_some(v as u64)
}

pub(crate) fn parse_u16(cell: &str) -> Option<u16> {
    parse_u64(cell).and_then(|v| u16::try_from(v).ok())
}

pub(crate) fn parse_u8(cell: &str) -> Option<u8> {
    parse_u64(cell).and_then(|v| u8::try_from(v).ok())
}
