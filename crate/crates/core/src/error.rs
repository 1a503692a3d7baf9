use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IbcError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions (value {value:e}, error estimate {error:e})"
    )]
    QuadratureNotConverged {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("cutoff {cutoff} exceeds grid cutoff {grid_cutoff}")]
    CutoffExceedsGrid { cutoff: f64, grid_cutoff: f64 },

    #[error("unsupported discretization: {0}")]
    Unsupported(String),

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed state dump: {0}")]
    Format(String),
}

impl IbcError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        IbcError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for IbcError {
    fn from(err: std::io::Error) -> Self {
        IbcError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, IbcError>;
