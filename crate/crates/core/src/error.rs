use thiserror::Error;

/// Errors produced by estimation, inference and the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("matrix is singular or not positive definite")]
    SingularMatrix,
    #[error("sample covariance of the covariates is singular")]
    SingularCovariance,
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),
    #[error("lambda estimate {0:e} is too close to zero for inference")]
    UnstableLambda(f64),
    #[error("invalid null direction: {0}")]
    InvalidNull(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("dimension {p} exceeds the maximum of {max} supported by this estimator")]
    DimensionTooLarge { p: usize, max: usize },
    #[error("probit likelihood diverges (complete separation): {0}")]
    SeparationError(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

impl Error {
    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix
                | Error::SingularCovariance
                | Error::DegenerateDirection(_)
                | Error::UnstableLambda(_)
                | Error::SeparationError(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
