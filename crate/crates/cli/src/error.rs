use std::fmt;

use eas_core::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed or out-of-range configuration, or a precondition the inputs violate.
    Config(String),
    /// Non-finite values, lost positivity, or a quadrature that did not converge.
    Numerical(String),
    /// An audit ran to completion and reported FAIL.
    AuditFail(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::AuditFail(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::AuditFail(m) => write!(f, "audit FAIL: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::Precondition(_)
            | Error::InsufficientData(_)
            | Error::ShapeMismatch => Self::Config(e.to_string()),
            Error::Positivity { .. } | Error::SigmaDomain { .. } | Error::NonFinite { .. } | Error::Quadrature(_) => {
                Self::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
