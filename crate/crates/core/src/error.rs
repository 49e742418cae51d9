use thiserror::Error;

/// Errors raised by model construction, exact laws and samplers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GibbsError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gamma function pole at {0}")]
    GammaPole(f64),

    #[error("quadrature did not converge: estimated error {error_estimate:e} after {evaluations} evaluations")]
    Quadrature {
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl GibbsError {
    /// Whether the failure comes from numerics rather than from the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, GibbsError::Quadrature { .. } | GibbsError::GammaPole(_))
    }
}

pub type Result<T> = std::result::Result<T, GibbsError>;

pub(crate) fn out_of_range(msg: impl Into<String>) -> GibbsError {
    GibbsError::OutOfRange(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> GibbsError {
    GibbsError::InvalidArgument(msg.into())
}
