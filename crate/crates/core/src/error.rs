use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window exceeded: {0}")]
    WindowExceeded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("contraction precondition violated: {0}")]
    Contraction(String),
    #[error("no convergence after {iterations} iterations (last change {last_delta:e})")]
    NotConverged { iterations: usize, last_delta: f64 },
}

impl FkError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        FkError::InvalidArgument(msg.into())
    }

    /// Validation problems versus numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            FkError::InvalidArgument(_) | FkError::WindowExceeded(_) | FkError::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FkError>;
