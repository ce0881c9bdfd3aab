//! Error types shared across the toolkit.
//!
//! Variants are grouped by how callers should react: `InvalidParam` means the
//! caller supplied a bad option, `Numeric` means a computation diverged, and
//! everything else points at broken or missing input data.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failures the library can report.
#[derive(Debug, Error)]
pub enum Error {
    /// An input file named by the caller (or a manifest) does not exist.
    #[error("missing input file: {0}")]
    MissingFile(PathBuf),

    /// Reading or writing a file failed at the OS level.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A CSV file could not be parsed at all (encoding, ragged rows, ...).
    #[error("malformed csv in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A JSON document could not be parsed or did not match its schema.
    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A required column is absent from an input table.
    #[error("required column is missing: {0}")]
    MissingColumn(String),

    /// A column holds both numeric and textual values; the caller must drop
    /// or clean it before feature encoding.
    #[error("column {0} mixes numeric and text values")]
    MixedColumn(String),

    /// A core flow field was named in a drop list; those fields are load
    /// bearing and cannot be pruned.
    #[error("cannot drop core flow column: {0}")]
    CoreColumnDrop(String),

    /// A vector or matrix had the wrong width for the fitted model.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A caller-supplied option is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input data is structurally valid but semantically unusable.
    #[error("bad input data: {0}")]
    Data(String),

    /// A computation produced a non-finite value and cannot continue.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True when the failure came from a diverging computation rather than
    /// bad inputs; callers usually map this onto a distinct exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}
