use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Output files could not be written.
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", location(path, *line))]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("{}: {message}", location(path, *line))]
    Data {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("{0}")]
    Numeric(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(path: &std::path::Path, line: Option<usize>) -> String {
    match line {
        Some(n) => format!("{}:{n}", path.display()),
        None => path.display().to_string(),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => exit::CONFIG,
            CliError::Data { .. } => exit::DATA,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub(crate) fn config(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Maps a library error raised while working on `path`. Bad parameters
    /// are blamed on the configuration, bad input on the data.
    pub(crate) fn from_core(err: mcmrb::Error, config: &std::path::Path, data: &std::path::Path) -> Self {
        match err {
            mcmrb::Error::Parameter { .. } => CliError::config(config, None, err.to_string()),
            mcmrb::Error::Input(_) => CliError::data(data, None, err.to_string()),
            _ => CliError::Numeric(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
