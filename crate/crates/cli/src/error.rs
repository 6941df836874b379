use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config files or inputs. Exit code 2.
    #[error("{0}")]
    Config(String),
    /// The run itself failed. Exit code 3.
    #[error("{0}")]
    Engine(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Engine(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(context: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.to_string(),
            source,
        }
    }
}

impl From<thymodyn_core::Error> for CliError {
    fn from(e: thymodyn_core::Error) -> Self {
        if let thymodyn_core::Error::Io(source) = e {
            return CliError::io("i/o error", source);
        }
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Engine(e.to_string())
        }
    }
}
