use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: parse error{}: {message}", .path.display(), position(*.line, *.column))]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },

    #[error("invalid scenario [{}]: {message}", .keys.join(", "))]
    Validation { keys: Vec<String>, message: String },

    #[error("numeric failure at {point}")]
    Numeric {
        point: String,
        #[source]
        source: rsma_core::Error,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: malformed table: {message}", .path.display())]
    Table { path: PathBuf, message: String },
}

fn position(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        (Some(l), None) => format!(" at line {l}"),
        _ => String::new(),
    }
}

impl CliError {
    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Table { .. } => 3,
            CliError::Validation { .. } => 4,
            CliError::Numeric { .. } => 5,
            CliError::Io { .. } | CliError::Csv { .. } => 6,
        }
    }

    pub(crate) fn validation(keys: impl IntoIterator<Item = impl Into<String>>, message: impl Into<String>) -> Self {
        CliError::Validation {
            keys: keys.into_iter().map(Into::into).collect(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
