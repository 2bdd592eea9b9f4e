/// Error kinds shared by every module.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A field failed validation; `field` names it with its record path.
    #[error("invalid `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input is well-formed but carries no information (zero rates, flat data...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The request is outside the physical validity of the model.
    #[error("outside model regime: {0}")]
    OutOfRegime(String),
    /// A requested value cannot be reached by the model.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// A numerical routine failed to converge.
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },
    /// A fit converged to something that fails the quality gates.
    #[error("fit rejected: {reason} (residual norm {residual_norm:.3e})")]
    FitQuality { reason: String, residual_norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput { field: field.into(), reason: reason.into() }
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

/// Rejects non-finite or negative values.
pub(crate) fn require_non_negative(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(field, format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn require_fraction(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(Error::invalid(field, format!("must lie in (0, 1], got {value}")))
    }
}
