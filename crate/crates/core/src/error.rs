use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite coordinate {value} in dimension {dim}")]
    NonFinite { dim: usize, value: f32 },

    #[error("inverted interval in dimension {dim}: {lo} > {hi}")]
    InvertedInterval { dim: usize, lo: f32, hi: f32 },

    #[error("dimensionality mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimensionality {0} (expected 2 or 3)")]
    UnsupportedDims(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("requested {requested} records but only {available} are available")]
    NotEnoughRecords { requested: usize, available: usize },

    #[error("selectivity {sigma} exceeds dataset size {len}")]
    Selectivity { sigma: usize, len: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
