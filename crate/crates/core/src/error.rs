//! Crate-wide error type.

use std::fmt;

/// Errors raised by parameter validation and physics preconditions.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor received a value outside its validity domain.
    InvalidParameter {
        what: &'static str,
        message: String,
    },
    /// An operation that needs a bright steady state was called below threshold.
    BelowThreshold { mu0: f64 },
    /// A time argument fell outside the pulse window [-T_R/2, T_R/2].
    TimeOutOfRange { t: f64, half_period: f64 },
    /// Simulation configuration violates a stability or sampling bound.
    InvalidConfig { message: String },
    /// Estimation failed (too little data, no usable lags, ...).
    Estimation { message: String },
    /// Grid mismatch or incompatible series in homodyne processing.
    GridMismatch { message: String },
    /// Record/file parsing failure.
    Parse { message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { what, message } => {
                write!(f, "invalid {what}: {message}")
            }
            Error::BelowThreshold { mu0 } => write!(
                f,
                "pump parameter mu0 = {mu0} is below threshold; no bright steady state"
            ),
            Error::TimeOutOfRange { t, half_period } => write!(
                f,
                "time {t} s outside pulse window [-{half_period}, {half_period}] s"
            ),
            Error::InvalidConfig { message } => write!(f, "invalid simulation config: {message}"),
            Error::Estimation { message } => write!(f, "estimation error: {message}"),
            Error::GridMismatch { message } => write!(f, "grid mismatch: {message}"),
            Error::Parse { message } => write!(f, "parse error: {message}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
