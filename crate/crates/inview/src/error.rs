use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] inview_core::Error),
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, reason: impl Into<String>) -> Self {
        AppError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    pub fn json(path: &Path, source: serde_json::Error) -> Self {
        AppError::Json {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for invalid input (bad flags, configs or parameters), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Json { source, .. } if !source.is_io() => 2,
            AppError::Core(
                inview_core::Error::Config(_)
                | inview_core::Error::Domain { .. }
                | inview_core::Error::UnderResolved { .. }
                | inview_core::Error::LensletIndex { .. },
            ) => 2,
            _ => 1,
        }
    }
}
