use std::io;

use thiserror::Error;

/// Errors produced by the engine, data layer, attacks and benchmarks.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters and inputs (or layers among themselves) do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value showed up while evaluating the network.
    #[error("numerical error at layer {layer}: {detail}")]
    Numerical { layer: usize, detail: String },

    /// A binary file (model or IDX) failed to parse.
    #[error("format error in `{field}`{}: {detail}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Format {
        field: String,
        offset: Option<usize>,
        detail: String,
    },

    /// A caller-supplied argument is out of its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Dataset contents do not satisfy a precondition (e.g. a class is missing).
    #[error("data error: {0}")]
    Data(String),

    /// Training diverged.
    #[error("training error: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, offset: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            offset,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
