use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite {what} at iteration {iter}")]
    NonFinite { what: &'static str, iter: usize },

    #[error("unsupported case: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

/// Fails with [`Error::NonFinite`] when any entry of `x` is NaN or infinite.
pub(crate) fn check_finite(x: &[f64], what: &'static str, iter: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what, iter })
    }
}
