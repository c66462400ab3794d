use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument to {operation}: {message}")]
    InvalidArgument {
        operation: &'static str,
        message: String,
    },

    /// A truncated sum or quadrature failed to settle within its hard cap.
    #[error("{operation} did not converge: {parameter} reached {limit}")]
    NonConvergence {
        operation: &'static str,
        parameter: &'static str,
        limit: f64,
    },

    /// A determinant or point set exceeds the size guard.
    #[error("{operation}: size {size} exceeds limit {limit}")]
    TooLarge {
        operation: &'static str,
        size: usize,
        limit: usize,
    },
}

impl Error {
    pub(crate) fn invalid(operation: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            operation,
            message: message.into(),
        }
    }

    /// True for numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub(crate) fn ensure_finite(operation: &'static str, name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(operation, format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_time(operation: &'static str, t: f64) -> Result<()> {
    ensure_finite(operation, "t", t)?;
    if t < 0.0 {
        return Err(Error::invalid(operation, format!("time must be >= 0, got {t}")));
    }
    Ok(())
}
