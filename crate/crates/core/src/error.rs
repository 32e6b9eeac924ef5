use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("drift matrix is not Hurwitz stable (spectral abscissa {abscissa:e})")]
    UnstableDrift { abscissa: f64 },

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("covariance determinant is not positive ({0:e})")]
    NonPositiveDeterminant(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("steady-state iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("steady state is ambiguous: seeds converged to |m_a| = {first:e} and {second:e}")]
    AmbiguousRoot { first: f64, second: f64 },

    #[error("analytic and finite-difference derivatives disagree (relative {relative:e})")]
    DerivativeMismatch { relative: f64 },

    #[error("covariance is singular")]
    SingularCovariance,

    #[error("state is pure in at least one mode; RLD is not defined on its support")]
    SingularState,

    #[error("heterodyne covariance is singular")]
    SingularSigma,

    #[error("quantum Fisher information matrix is singular")]
    SingularQfim,

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("at {point}: {source}")]
    AtPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, point: impl Into<String>) -> Self {
        Error::AtPoint {
            point: point.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with any parameter-point annotation stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
