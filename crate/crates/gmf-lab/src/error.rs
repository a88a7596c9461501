//! Error taxonomy shared by every module.
//!
//! Five kinds cover the whole crate: shape mismatches, violated call
//! contracts, bad configuration, iteration that failed to converge, and
//! mathematically undefined requests (log of a zero concentration and the
//! like). I/O errors are wrapped so library calls can surface them without
//! panicking.

use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Two operands (or an operand and an expected form) disagree in shape.
    /// Both shapes are spelled out so the message is actionable.
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },
    /// A precondition of an operation was violated (non-scalar loss root,
    /// label out of range, empty sample set, ...).
    Contract(String),
    /// A configuration value is outside its documented domain, or an unknown
    /// configuration key was supplied.
    Config(String),
    /// An iterative procedure ran out of its sweep budget.
    Convergence { residual: f64, detail: String },
    /// The requested quantity is undefined for the given state.
    Domain(String),
    /// Underlying file-system failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, expected, got } => {
                write!(f, "shape mismatch in {op}: expected {expected}, got {got}")
            }
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Convergence { residual, detail } => {
                write!(f, "failed to converge ({detail}; last residual {residual:e})")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

/// Shorthand used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Helper for the common two-shape mismatch message.
    pub(crate) fn shape(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            op,
            expected: expected.into(),
            got: got.into(),
        }
    }
}
