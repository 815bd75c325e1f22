use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CfnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CfnError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error in {context}: {detail}")]
    Numeric { context: String, detail: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("finite-difference oracle failed: {0}")]
    Oracle(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("training aborted at epoch {epoch}: {detail}")]
    Training { epoch: usize, detail: String },

    #[error("ingestion error in {path}: {detail}")]
    Ingestion { path: PathBuf, detail: String },

    #[error("unknown node kind `{0}` (not registered)")]
    Registry(String),

    #[error("unsupported model format version {found} (this build reads up to {supported})")]
    Version { found: u64, supported: u64 },

    #[error("malformed model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CfnError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        CfnError::Shape(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        CfnError::Argument(msg.into())
    }

    pub(crate) fn numeric(context: impl Into<String>, detail: impl Into<String>) -> Self {
        CfnError::Numeric {
            context: context.into(),
            detail: detail.into(),
        }
    }

    /// Prefixes the location context of numeric and shape errors, leaving other kinds alone.
    pub fn within(self, scope: impl std::fmt::Display) -> Self {
        match self {
            CfnError::Numeric { context, detail } => CfnError::Numeric {
                context: format!("{scope} / {context}"),
                detail,
            },
            CfnError::Shape(msg) => CfnError::Shape(format!("{scope}: {msg}")),
            other => other,
        }
    }
}
