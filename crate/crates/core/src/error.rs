use std::path::PathBuf;

use thiserror::Error;

use crate::grid::Parity;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {nx}x{ny}: {reason}")]
    InvalidGrid { nx: usize, ny: usize, reason: String },

    #[error("non-finite value {value} at index {index} (x index {ix}, y index {iy})")]
    NonFinite {
        index: usize,
        ix: usize,
        iy: usize,
        value: f64,
    },

    #[error("non-finite value in term `{term}`")]
    NonFiniteTerm { term: &'static str },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("parity mismatch: expected {expected:?}, found {found:?}")]
    ParityMismatch { expected: Parity, found: Parity },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("assumption {assumption} violated at tau = {tau}: {lhs} > {rhs}")]
    AssumptionViolated {
        assumption: &'static str,
        tau: f64,
        lhs: f64,
        rhs: f64,
    },

    #[error("time step {dt} violates the {constraint} constraint (limit {limit})")]
    Cfl {
        constraint: &'static str,
        dt: f64,
        limit: f64,
    },

    #[error("{0}")]
    Config(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
