use thiserror::Error;

/// Errors produced by model construction, the kernels, and the run driver.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Leapfrog integration hit a non-finite gradient.
    #[error("integration diverged at leapfrog step {step}")]
    IntegrationDiverged { step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
