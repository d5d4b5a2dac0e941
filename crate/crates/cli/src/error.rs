use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigFile { .. } | Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<bundleopt::Error> for CliError {
    fn from(e: bundleopt::Error) -> Self {
        use bundleopt::Error as E;
        match e {
            E::InvalidConfig(_) | E::Dimension(_) | E::Unsupported(_) => Self::Config(e.to_string()),
            E::SingularRegression { .. } | E::QpFailure(_) | E::Diverged(_) => Self::Numerical(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::io("writing csv", e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
