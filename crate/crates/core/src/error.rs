use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("score at index {index} is not strictly positive ({value})")]
    NonPositiveScore { index: usize, value: f64 },

    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("comparison count L must be at least 1")]
    ZeroComparisons,

    #[error("normalization d = {d} is smaller than the maximum degree {d_max}")]
    NormalizationTooSmall { d: f64, d_max: usize },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("comparison graph is disconnected")]
    Disconnected,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("K = {k} is out of range for n = {n}")]
    BadK { k: usize, n: usize },

    #[error("reference vector is identically zero")]
    ZeroTruth,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not square or not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("chain is not reversible with respect to the given distribution (max violation {0:e})")]
    NotReversible(f64),

    #[error("weights must be strictly positive and sum to one")]
    InvalidDistribution,

    #[error("reference probability q = {0} must lie strictly inside (0, 1)")]
    DegenerateQ(f64),

    #[error("epsilon = {0} must lie in (0, 1/2)")]
    BadEps(f64),

    #[error("threshold kind {0} is not an achievability regime")]
    BadRegime(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::BadK { .. } | Error::BadEps(_)
        )
    }
}
