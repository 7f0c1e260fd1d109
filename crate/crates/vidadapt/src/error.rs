use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] vidadapt_core::Error),

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

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("external segmenter timed out after {waited:?} waiting for a response in {}", dir.display())]
    Timeout { dir: PathBuf, waited: Duration },

    #[error("{}: malformed response header: {message}", path.display())]
    MalformedHeader { path: PathBuf, message: String },

    #[error(
        "frame {frame}: probabilities at pixel {pixel} sum to {sum}, outside 1 +- {tolerance}"
    )]
    ProbabilitySum {
        frame: usize,
        pixel: usize,
        sum: f64,
        tolerance: f64,
    },

    #[error("external segmenter failed on request {id}: {message}")]
    External { id: u64, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait PathContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> PathContext<T> for std::result::Result<T, std::io::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}

impl<T> PathContext<T> for std::result::Result<T, serde_json::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }
}

impl<T> PathContext<T> for std::result::Result<T, image::ImageError> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Image {
            path: path.into(),
            source,
        })
    }
}
