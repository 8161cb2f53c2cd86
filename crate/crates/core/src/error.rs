use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by fitting, path construction and diagnostics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("singular elbow system for cases {indices:?}")]
    SingularElbow { indices: Vec<usize> },

    #[error("path exceeded {limit} breakpoints")]
    Divergence { limit: usize },

    #[error("KKT certificate {residual:e} exceeds tolerance at parameter {at}")]
    Certificate { residual: f64, at: f64 },

    #[error("oracle stopped at KKT residual {residual:e}")]
    OracleFailure { residual: f64 },

    #[error("contract violation: {0}")]
    Contract(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } => "input",
            Error::SingularElbow { .. } => "singular-elbow",
            Error::Divergence { .. } => "divergence",
            Error::Certificate { .. } | Error::Contract(_) => "internal-consistency",
            Error::OracleFailure { .. } => "oracle-failure",
        }
    }
}
