use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("requested zero samples")]
    EmptyRequest,
    #[error("unknown or invalid distribution kind: {0}")]
    InvalidKind(String),
    #[error("hilbert order {0} outside [1, 10]")]
    InvalidOrder(u32),
    #[error("batch {batch} is outside a stage of {stage_batches} batches")]
    OutOfStage { batch: usize, stage_batches: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("insufficient data: need at least {needed} vectors, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("too small: need at least {needed} codewords, got {got}")]
    TooSmall { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("codewords {0} and {1} coincide, direction is undefined")]
    ZeroDirection(usize, usize),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("invalid permutation: {0}")]
    Permutation(String),
    #[error("requested {k} components from {dim}-dimensional data")]
    Rank { k: usize, dim: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    Length {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
