use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("non-finite weight at index {index} (value {value})")]
    NonFiniteWeight { index: usize, value: f64 },

    #[error("invalid data in row {row}: {message}")]
    InvalidRow { row: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("all {runs} descent runs diverged: {details}")]
    AllRunsDiverged { runs: usize, details: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
