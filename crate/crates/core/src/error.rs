use thiserror::Error;

/// Errors raised by the quadrature routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An amplitude or phase evaluation returned NaN or infinity.
    #[error("non-finite integrand sample at {0}")]
    Evaluation(String),

    /// The dense factorisation backend reported a failure.
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("iteration did not converge within {0} steps")]
    ConvergenceFailure(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
