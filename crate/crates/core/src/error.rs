use std::path::PathBuf;

use crate::datasets::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no samples")]
    NoSamples,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("increment spec unsatisfiable: class {class} needs {requested} samples, pool has {available}")]
    Unsatisfiable {
        class: ClassId,
        requested: usize,
        available: usize,
    },

    #[error("class {class} has {count} samples, at least {required} required")]
    TooFewSamples {
        class: ClassId,
        count: usize,
        required: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("binary training requires both classes, got only {0}")]
    SingleClass(&'static str),

    #[error("SMO did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("no chromosome produced a usable SVM for class pair ({0}, {1})")]
    NoUsableModel(ClassId, ClassId),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("increment must contain at least 2 classes, found {0}")]
    NotEnoughClasses(usize),

    #[error("cannot produce weak hypothesis with ε < 0.5 after {retries} attempts")]
    WeakLearnerExhausted { retries: usize },

    #[error("model file: {0}")]
    Format(String),

    #[error("missing data file {path}; {hint}")]
    MissingData { path: PathBuf, hint: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
