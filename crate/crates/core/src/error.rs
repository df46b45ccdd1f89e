use thiserror::Error;

/// Errors raised by the solver, the linear-analysis audits and the diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("fields live on different grids or have mismatched component counts")]
    ShapeMismatch,

    #[error("density positivity violated: min rho = {min_rho:.3e} below floor {floor:.1e}")]
    Positivity { min_rho: f64, floor: f64 },

    #[error("sigma outside the admissible range of the inverse transform (value {value:.3e})")]
    SigmaDomain { value: f64 },

    #[error("non-finite value detected at t = {t}")]
    NonFinite { t: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
