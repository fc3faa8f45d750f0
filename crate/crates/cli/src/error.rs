use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration; exit status 2.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot read {}: {source}", path.display())]
    MissingFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A failure while running; exit status 1.
    #[error("runtime error: {0}")]
    Runtime(#[from] nswbandit::Error),

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// One or more validation suites failed; exit status 1.
    #[error("{0} validation suite(s) failed")]
    SuitesFailed(usize),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::MissingFile { .. } => 2,
            CliError::Runtime(_) | CliError::Output { .. } | CliError::SuitesFailed(_) => 1,
        }
    }
}

/// Turns a core error raised while checking the configuration into a config
/// error tagged with `field`.
pub(crate) fn as_config(field: &str) -> impl Fn(nswbandit::Error) -> CliError + '_ {
    move |e| match e {
        nswbandit::Error::Parse { field, message } => CliError::Config { field, message },
        other => CliError::config(field, other.to_string()),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
