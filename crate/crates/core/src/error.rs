use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A root finder was asked for a value the target function never attains.
    #[error("no root: {0}")]
    NoRoot(String),
    /// An iterative routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Fails with a domain error unless `x` is finite.
pub(crate) fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("{name} must be finite, got {x}")))
    }
}

/// Fails with a domain error unless `x` is finite and strictly positive.
pub(crate) fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::domain(format!("{name} must be positive, got {x}")))
    }
}

/// Fails with a domain error unless `x` is finite and nonnegative.
pub(crate) fn nonnegative(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::domain(format!(
            "{name} must be nonnegative, got {x}"
        )))
    }
}
