use thiserror::Error;

/// Errors raised by the forest, the evaluator and the stream readers.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "memory budget of {budget} bytes cannot hold one branch-out per tree \
         (need at least {required} bytes)"
    )]
    BudgetTooSmall { budget: usize, required: usize },

    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label {label} out of range for {label_count} labels")]
    LabelOutOfRange { label: usize, label_count: usize },

    #[error("node arena exhausted: {free} free records, {needed} needed")]
    OutOfCapacity { free: usize, needed: usize },

    #[error("tree {0} is empty")]
    EmptyTree(usize),

    #[error("every tree in the forest is empty")]
    EmptyForest,

    #[error("node {0} is not a leaf")]
    NotALeaf(u32),

    #[error("node {0} has no parent and cannot be trimmed")]
    RootTrim(u32),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}: expected {expected} columns, got {actual}")]
    ColumnCount {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
