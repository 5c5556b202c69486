use std::path::PathBuf;

use thiserror::Error;

/// Everything the driver can fail with, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: syntax error: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// A scenario that parses but breaks a rule. `location` is `line:column`
    /// when the offending key can be pinned in the file.
    #[error("invalid {field}: {reason}{}", location.as_ref().map(|l| format!(" (at {l})")).unwrap_or_default())]
    Invalid {
        field: String,
        reason: String,
        location: Option<String>,
    },
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("simulation failed: {0}")]
    Runtime(String),
}

impl CliError {
    /// 0 success, 1 validation, 2 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax { .. } | CliError::Invalid { .. } | CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors raised while checking a scenario before anything runs.
    pub fn validation(e: macromodule::Error) -> Self {
        match e {
            macromodule::Error::Invalid { field, reason } => CliError::Invalid {
                field,
                reason,
                location: None,
            },
            macromodule::Error::Domain(msg) => CliError::Invalid {
                field: "scenario".into(),
                reason: msg,
                location: None,
            },
        }
    }

    /// Errors raised by a scenario that already passed validation.
    pub fn runtime(e: macromodule::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
