use thiserror::Error;

/// Errors raised by the solvers, losses and kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("residual matrix is numerically rank deficient")]
    RankDeficient,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
