use std::path::PathBuf;

/// Errors raised by geometry validation, projection and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum TomoError {
    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },

    #[error("degenerate ray: source and destination coincide at ({x}, {y})")]
    DegenerateRay { x: f64, y: f64 },

    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad format: {why}")]
    Format { path: PathBuf, why: String },
}

impl TomoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TomoError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, why: impl Into<String>) -> Self {
        TomoError::Format {
            path: path.into(),
            why: why.into(),
        }
    }
}
