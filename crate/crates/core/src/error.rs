use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading or validating an experiment configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("bad override `{spec}`: {reason}")]
    Override { spec: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Internal consistency failures detected while a run is in progress.
///
/// These indicate a simulator bug rather than a bad input; the run is aborted
/// and the message carries a short state dump.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("illegal HARQ transition: {0}")]
    Harq(#[from] crate::mac::harq::HarqError),

    #[error("assertion failed at symbol {symbol}: {message}")]
    Assertion { symbol: u64, message: String },
}
