use std::path::PathBuf;

/// Errors produced by the rendering and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("malformed image `{}`: {reason}", path.display())]
    MalformedImage { path: PathBuf, reason: String },

    #[error("cannot access `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(
        "manifest mismatch: {} file(s) only in the real set {:?}, {} file(s) only in the generated set {:?}",
        only_real.len(), only_real, only_generated.len(), only_generated
    )]
    ManifestMismatch {
        only_real: Vec<String>,
        only_generated: Vec<String>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedImage {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by files or user input rather than by the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::MalformedImage { .. }
                | Error::Config(_)
                | Error::ManifestMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
