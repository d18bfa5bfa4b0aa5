use std::path::Path;

use nql::query::render_diagnostic;
use nql::NqlError;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: format!("usage error: {}", message.into()),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_RUNTIME,
            message: format!("error: {}", message.into()),
        }
    }

    /// A query failure, rendered against its source text.
    pub fn query(err: &NqlError, source: &str) -> Self {
        CliError {
            code: code_of(err),
            message: render_diagnostic(err, source),
        }
    }
}

fn code_of(err: &NqlError) -> u8 {
    match err {
        NqlError::Parse(_) | NqlError::Bind { .. } | NqlError::Usage(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

impl From<NqlError> for CliError {
    fn from(err: NqlError) -> Self {
        CliError {
            code: code_of(&err),
            message: format!("error: {err}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::runtime(err.to_string())
    }
}

/// Input paths must exist before any work starts.
pub fn require_file(flag: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{flag} {}: no such file",
            path.display()
        )))
    }
}

/// Output paths need an existing parent directory.
pub fn require_parent(flag: &str, path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(CliError::usage(format!(
            "{flag} {}: directory {} does not exist",
            path.display(),
            p.display()
        ))),
        _ if path.is_dir() => Err(CliError::usage(format!(
            "{flag} {}: is a directory",
            path.display()
        ))),
        _ => Ok(()),
    }
}
