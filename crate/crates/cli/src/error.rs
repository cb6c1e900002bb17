use std::fmt;

use serde::Serialize;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Serialize)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { exit_code: EXIT_USAGE, kind: "usage".into(), message: message.into() }
    }

    pub fn input(kind: &str, message: impl Into<String>) -> Self {
        CliError { exit_code: EXIT_INPUT, kind: kind.into(), message: message.into() }
    }

    /// Attach the offending path to the message.
    pub fn at(mut self, path: &std::path::Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<traitleak::Error> for CliError {
    fn from(e: traitleak::Error) -> Self {
        use traitleak::Error as E;
        let exit_code = match &e {
            e if e.is_degenerate() => EXIT_DEGENERATE,
            // these come from flag values rather than file contents
            E::Config(_) | E::InvalidGrid(_) | E::UnknownClass { .. } | E::UnknownTrait(_) | E::UnknownFeature(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        };
        CliError { exit_code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input("io", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
