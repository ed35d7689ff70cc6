use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum MrfError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("value outside its domain: {0}")]
    Domain(String),

    #[error("problem too large for {method}: {detail}")]
    TooLarge { method: &'static str, detail: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("insufficient quadrature resolution: {0}")]
    Resolution(String),

    #[error("correlation {rho} does not give a positive definite exchangeable matrix for p = {p}")]
    Correlation { rho: f64, p: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MrfError>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(MrfError::DimensionMismatch { expected, found })
    }
}
