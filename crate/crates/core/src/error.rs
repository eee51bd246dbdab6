use std::path::PathBuf;

/// Errors produced anywhere in the matching pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes or channel counts of two operands disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A spatial extent is empty or does not fit where it has to.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A caller supplied an invalid parameter.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    /// A weight bundle, golden file, or dataset manifest failed validation.
    #[error("{}: {message}", path.display())]
    Load { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn load(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input parameters rather than bad files.
    pub fn is_argument(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Dimension(_) | Error::Geometry(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
