use std::io;

use thiserror::Error;

/// Errors produced by the field, topology and ensemble pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A spectral integral does not converge at the named limit.
    #[error("divergent integral at {limit}: {detail}")]
    Divergent { limit: &'static str, detail: String },

    /// The field has zero variance (or zero gradient variance) where a
    /// normalisation needs it.
    #[error("degenerate field: {0}")]
    DegenerateField(String),

    /// Invalid configuration (grid size, thresholds, config file keys).
    #[error("config error: {0}")]
    Config(String),

    /// A field or mask file failed to parse.
    #[error("format error: {0}")]
    Format(String),

    /// An exhaustive enumeration was asked to go past its size guard.
    #[error("size guard exceeded: {0}")]
    Size(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Format(_) => 3,
            Error::Domain(_)
            | Error::Divergent { .. }
            | Error::DegenerateField(_)
            | Error::Size(_) => 4,
        }
    }
}
