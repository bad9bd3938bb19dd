use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// A configuration field failed validation.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// The configuration document could not be parsed.
    #[error("could not parse config: {0}")]
    Parse(String),

    #[error("aggregation window is empty: burn-in {burn_in} with only {len} records")]
    EmptyWindow { burn_in: usize, len: usize },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's input rather than the environment.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Config { .. } | Error::Parse(_)
        )
    }
}
