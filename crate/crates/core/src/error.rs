//! Error types shared across the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while loading data, configuring a run or
/// computing an indicator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// The input file is structurally unusable (missing column, no data rows).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A data row violates a bar invariant. `row` is the 1-based data row
    /// number (header not counted).
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },

    /// Two bars share the same timestamp after sorting.
    #[error("duplicate timestamp {timestamp} in series {symbol}")]
    DuplicateTimestamp { symbol: String, timestamp: String },

    /// A parameter fails its own invariant (non-positive multiplier, zero
    /// window, malformed grid...).
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// The series is too short for the requested computation. `what` names
    /// the limiting ingredient so callers can tell which warm-up failed.
    #[error("series too short for {what}: need at least {needed} bars, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// A synthetic spec drives the generated price to zero or below.
    #[error("synthetic spec produces non-positive price {price} at bar {index}")]
    NonPositivePrice { index: usize, price: f64 },

    /// A computation has no meaningful answer on this input (zero variance,
    /// zero power threshold at a defined bar).
    #[error("degenerate computation: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for errors that signal a degenerate computation rather than bad
    /// input data; the CLI maps these to a distinct exit code.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_))
    }
}
