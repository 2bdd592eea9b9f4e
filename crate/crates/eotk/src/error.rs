use std::fmt;

use eotk_core::Error as CoreError;

/// Exit code for malformed input or configuration.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numerical failures, rejected fits and failed checks.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERICAL, message: message.into() }
    }

    /// Classifies a model error, naming the config block it came from.
    pub fn from_core(err: CoreError, block: &str) -> Self {
        match err {
            CoreError::InvalidInput { field, reason } => {
                let path = if block.is_empty() { field } else { format!("{block}.{field}") };
                CliError::input(format!("invalid `{path}`: {reason}"))
            }
            CoreError::Domain(m) => CliError::input(format!("{block}: domain error: {m}")),
            other => CliError::numerical(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::from_core(err, "")
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::input(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a block prefix to model errors.
pub trait InBlock<T> {
    fn in_block(self, block: &str) -> CliResult<T>;
}

impl<T> InBlock<T> for eotk_core::Result<T> {
    fn in_block(self, block: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(e, block))
    }
}
