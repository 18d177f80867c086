use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid space parameters: {0}")]
    InvalidSpace(String),
    #[error("point-level operations require m2 = 0 (got m2 = {m2})")]
    RequiresRealHyperbolic { m2: u32 },
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ball of radius {radius} at s = {center_s} is not contained in the grid box")]
    NotContained { radius: f64, center_s: f64 },
    #[error("quadrature did not converge: estimate {value:e}, error {error:e}")]
    Quadrature { value: f64, error: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
