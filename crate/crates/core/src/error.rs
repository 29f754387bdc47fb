//! Error type shared across the crate.

use alloc::string::String;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes surfaced by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Points or vectors of mismatched dimension were combined.
    DimensionMismatch {
        /// Dimension required by the other operand.
        expected: usize,
        /// Dimension actually supplied.
        got: usize,
    },
    /// A parameter violated its domain (non-positive variance, bad level, ...).
    InvalidParameter(String),
    /// The requested kernel/error-model combination has no closed form;
    /// callers should fall back to Monte Carlo evaluation.
    NoClosedForm(&'static str),
    /// Cholesky factorization failed even after jitter escalation; the index
    /// is the offending leading minor (0-based).
    SingularMatrix {
        /// Leading minor whose pivot was non-positive.
        minor: usize,
    },
    /// A numerical invariant was violated (details in the message).
    Numerical(String),
    /// A quantile was requested outside the range spanned by a CDF grid;
    /// the caller should widen the grid.
    GridTooNarrow {
        /// Probability level that could not be bracketed.
        level: f64,
        /// CDF value at the low end of the grid.
        f_lo: f64,
        /// CDF value at the high end of the grid.
        f_hi: f64,
    },
    /// Every optimizer restart failed; the message aggregates per-restart
    /// diagnostics.
    FitFailed(String),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NoClosedForm(what) => {
                write!(f, "no closed form for {what}; use Monte Carlo evaluation")
            }
            Error::SingularMatrix { minor } => {
                write!(
                    f,
                    "matrix not positive definite at leading minor {minor} (after jitter escalation)"
                )
            }
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::GridTooNarrow { level, f_lo, f_hi } => {
                write!(
                    f,
                    "CDF grid spans [{f_lo}, {f_hi}] and cannot bracket level {level}; widen zgrid"
                )
            }
            Error::FitFailed(msg) => write!(f, "fit failed: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
