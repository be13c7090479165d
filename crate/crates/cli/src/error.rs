use std::io;

use rodheat::StabilityReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("{0}")]
    Input(String),

    #[error("stability check failed: {0}")]
    Unstable(StabilityReport),
}

impl CliError {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// 2 for configuration or input problems, 3 for a stability rejection.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) => 2,
            CliError::Unstable(_) => 3,
        }
    }
}

impl From<rodheat::Error> for CliError {
    fn from(e: rodheat::Error) -> Self {
        match e {
            rodheat::Error::Unstable(report) => CliError::Unstable(report),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
