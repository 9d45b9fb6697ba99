//! Crate-wide error type.

use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Filesystem failure, with the path that was being touched.
    Io { path: PathBuf, source: io::Error },
    /// A volume container that could not be parsed.
    MalformedHeader { path: PathBuf, reason: String },
    /// Non-finite intensities where the data model forbids them.
    NonFinite(String),
    /// A cohort/experiment spec that cannot be realized.
    InvalidSpec(String),
    /// Shape or grid mismatch between arrays that must agree.
    ShapeMismatch(String),
    /// Brain extraction found nothing above background.
    EmptyForeground,
    /// Metric requested on labels with a single class.
    SingleClass(String),
    /// Case/reader identifiers that were expected to align do not.
    IdMismatch(String),
    /// Weight transfer matched zero parameters.
    NoParametersTransferred,
    /// Training aborted (divergence, missing labels, broken chain).
    Train(String),
    /// Malformed configuration or CLI input.
    Config(String),
    /// JSON (de)serialization failure.
    Json(serde_json::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "i/o error on {}: {}", path.display(), source),
            Error::MalformedHeader { path, reason } => {
                write!(f, "malformed header in {}: {}", path.display(), reason)
            }
            Error::NonFinite(what) => write!(f, "non-finite intensities: {what}"),
            Error::InvalidSpec(msg) => write!(f, "invalid spec: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::EmptyForeground => write!(f, "no foreground voxels above background"),
            Error::SingleClass(msg) => write!(f, "labels contain a single class: {msg}"),
            Error::IdMismatch(msg) => write!(f, "id mismatch: {msg}"),
            Error::NoParametersTransferred => write!(f, "0 parameters transferred"),
            Error::Train(msg) => write!(f, "training error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
