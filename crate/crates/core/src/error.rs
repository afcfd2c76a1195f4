//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of a special function.
    #[error("{function}: argument {value} outside the domain (must be finite and > 0)")]
    Domain { function: &'static str, value: f64 },

    /// Parameter record violates its family invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Observation outside the support of the distribution.
    #[error("observation {y} is outside the support of {family}")]
    OutsideSupport { family: &'static str, y: u64 },

    /// Baseline puts (numerically) all of its mass at zero, so truncation is undefined.
    #[error("baseline is degenerate at zero (p0 = {p0}); zero-truncation undefined")]
    DegenerateAtZero { p0: f64 },

    /// Not enough nonzero observations to estimate the baseline.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Every observation is zero: the zero weight is 1 and the baseline is unidentified.
    #[error("all {n} observations are zero: phi_hat = 1, baseline parameters undefined")]
    AllZero { n: usize },

    /// The zero weight sits on the boundary of [0, 1] where the information is undefined.
    #[error("phi = {phi} is on the boundary; Fisher information undefined")]
    Boundary { phi: f64 },

    /// Fisher matrix could not be inverted.
    #[error("singular Fisher information matrix (condition number {condition:.3e})")]
    SingularFisher { condition: f64 },

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    /// Malformed count table.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
