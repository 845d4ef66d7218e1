//! Error type shared by every module of the crate.

use chrono::NaiveDate;
use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification of an error, used by callers (e.g. the CLI) to
/// select an exit path without matching on every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The input data violates a contract (malformed file, bad values,
    /// series too short, under-populated seasonal bins, ...).
    Data,
    /// A numerical routine failed (non-convergence, domain violation).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv: malformed row at data line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },

    #[error("csv: negative precipitation {value} at data line {line}")]
    NegativeValue { line: usize, value: f64 },

    #[error("csv: duplicate date {date}")]
    DuplicateDate { date: NaiveDate },

    #[error("csv: {got} data rows, at least {need} required")]
    TooFewRows { got: usize, need: usize },

    #[error("moving average window k={k} out of range for series of length {len}")]
    WindowOutOfRange { k: usize, len: usize },

    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("{op} did not converge within {iters} iterations")]
    NoConvergence { op: &'static str, iters: usize },

    #[error("all values are zero; the gamma component is unidentifiable")]
    AllZero,

    #[error("{got} values provided, at least {need} required")]
    TooFewValues { got: usize, need: usize },

    #[error("{got} distinct positive values, at least 2 required")]
    TooFewDistinctPositives { got: usize },

    #[error("seasonal bin {bin}: {source}")]
    Bin {
        bin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bin {bin} holds {size} values, fewer than the {min} required for a usable fit")]
    UnderPopulatedBin { bin: usize, size: usize, min: usize },

    #[error("insufficient data: {got} defined observations for {coeffs} coefficients (need >= {need})")]
    InsufficientData { got: usize, coeffs: usize, need: usize },

    #[error("series contains zero values but pi was fixed to zero")]
    ZerosWithPiFixed,

    #[error("monte carlo replicate count m={m} too small, need >= 100")]
    ReplicateCountTooSmall { m: usize },

    #[error("{got} points provided, at least {need} required")]
    TooFewPoints { got: usize, need: usize },

    #[error("model file: {msg}")]
    ModelFormat { msg: String },

    #[error("model was fitted at scale {fitted}, requested scale {requested}")]
    ScaleMismatch { fitted: usize, requested: usize },

    #[error("index file: line {line}: {msg}")]
    IndexFormat { line: usize, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Domain-violation helper; keeps call sites to one line.
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Domain { .. } | Error::NoConvergence { .. } => ErrorCategory::Numeric,
            Error::Bin { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }
}
