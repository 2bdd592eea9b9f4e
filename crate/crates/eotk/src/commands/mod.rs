pub mod calibrate;
pub mod fit;
pub mod optimize;
pub mod report;
pub mod sweep;

use eotk_core::Error as CoreError;
use serde::Serialize;

use crate::error::{CliError, CliResult, EXIT_NUMERICAL};
use crate::io::json_string;

/// What a subcommand produced: the document to emit, diagnostic lines for stderr and the
/// exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub notes: Vec<String>,
    pub code: i32,
}

impl Output {
    pub fn ok(text: String) -> Self {
        Output { text, notes: Vec::new(), code: 0 }
    }
}

#[derive(Serialize)]
struct Flagged<'a> {
    status: &'a str,
    reason: String,
}

/// Input errors abort; numerical and fit-quality errors become a flagged record with exit 3.
pub(crate) fn flag_or_fail(err: CoreError, block: &str) -> CliResult<Output> {
    let e = CliError::from_core(err, block);
    if e.code != EXIT_NUMERICAL {
        return Err(e);
    }
    let text = json_string(&Flagged { status: "flagged", reason: e.message.clone() })?;
    Ok(Output { text, notes: vec![format!("FLAGGED: {}", e.message)], code: EXIT_NUMERICAL })
}
