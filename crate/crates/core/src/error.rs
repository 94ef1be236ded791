use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dataset has {0} class(es); at least 2 are required")]
    SingleClass(usize),

    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),

    #[error("insufficient rows: need {needed}, have {available}")]
    InsufficientRows { needed: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all sample weights are zero")]
    ZeroWeights,

    #[error("training data fingerprint mismatch: ensemble was fit on {expected}, got {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("data value undefined for point {0}: it is never out-of-bag")]
    UndefinedValue(usize),

    #[error("network error while fetching OpenML dataset {id}: {message}")]
    Network { id: u64, message: String },

    #[error("unknown OpenML dataset {0}")]
    UnknownDataset(u64),

    #[error("ground-truth set of mislabeled points is empty")]
    EmptyTruth,

    #[error("no marginal-contribution samples")]
    NoSamples,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures a caller may retry (currently only network errors).
    pub fn is_retriable(&self) -> bool {
        matches!(self, Error::Network { .. })
    }
}
