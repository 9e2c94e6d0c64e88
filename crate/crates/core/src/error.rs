use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus contains no instances")]
    EmptyCorpus,
    #[error("instance id `{0}` appears more than once")]
    DuplicateInstanceId(String),
    #[error("instance `{0}` has an empty dataset id")]
    EmptyDatasetId(String),

    #[error("no confidence record for corpus instance `{0}`")]
    MissingInstance(String),
    #[error("record references instance `{0}` which is not in the corpus")]
    UnknownInstance(String),
    #[error("more than one record for instance `{0}`")]
    DuplicateRecord(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("confidence {value} for instance `{instance}` is outside [0, 1]")]
    OutOfRange { instance: String, value: f64 },
    #[error("expected {expected} but found {found}")]
    ModeMismatch { expected: String, found: String },
    #[error(
        "instance `{instance}` declares home meta-dataset {declared} but is assigned to {assigned}"
    )]
    MetaMismatch {
        instance: String,
        declared: usize,
        assigned: usize,
    },

    #[error("number of meta-datasets must be at least 2, got {0}")]
    BadN(usize),
    #[error("{instances} instances cannot fill {n_meta} meta-datasets")]
    TooFewInstances { instances: usize, n_meta: usize },

    #[error("invalid split count k = {k}: {reason}")]
    BadK { k: usize, reason: String },
    #[error("only {distinct} distinct scores, cannot form {k} splits")]
    DegenerateScores { distinct: usize, k: usize },

    #[error("frac must lie in [0, 1], got {0}")]
    BadFrac(f64),

    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("training order does not match the corpus: {0}")]
    OrderCorpusMismatch(String),

    #[error("bin width must lie in (0, 1], got {0}")]
    BadBinWidth(f64),
    #[error("bucket mismatch: {0}")]
    BucketMismatch(String),
    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable, machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyCorpus => "EmptyCorpus",
            Error::DuplicateInstanceId(_) => "DuplicateInstanceId",
            Error::EmptyDatasetId(_) => "EmptyDatasetId",
            Error::MissingInstance(_) => "MissingInstance",
            Error::UnknownInstance(_) => "UnknownInstance",
            Error::DuplicateRecord(_) => "DuplicateRecord",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::ModeMismatch { .. } => "ModeMismatch",
            Error::MetaMismatch { .. } => "MetaMismatch",
            Error::BadN(_) => "BadN",
            Error::TooFewInstances { .. } => "TooFewInstances",
            Error::BadK { .. } => "BadK",
            Error::DegenerateScores { .. } => "DegenerateScores",
            Error::BadFrac(_) => "BadFrac",
            Error::BadSpec(_) => "BadSpec",
            Error::OrderCorpusMismatch(_) => "OrderCorpusMismatch",
            Error::BadBinWidth(_) => "BadBinWidth",
            Error::BucketMismatch(_) => "BucketMismatch",
            Error::KeyMismatch(_) => "KeyMismatch",
            Error::Parse { .. } => "Parse",
            Error::Config(_) => "Config",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
