//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {op}: {details}")]
    ShapeMismatch { op: &'static str, details: String },

    #[error("ARPA parse error at line {line}: {message}")]
    ArpaParse { line: usize, message: String },

    #[error("vocabulary parse error at line {line}: {message}")]
    VocabParse { line: usize, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("soft label store is missing a label for sentence {sentence}, position {position}")]
    MissingSoftLabel { sentence: usize, position: usize },

    #[error("position {position} out of range for sentence {sentence} (length {len})")]
    PositionOutOfRange {
        sentence: usize,
        position: usize,
        len: usize,
    },

    #[error("sequence of length {len} exceeds maximum {max}; enable long-input mode to allow it")]
    SequenceTooLong { len: usize, max: usize },

    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),

    #[error("empty evaluation set")]
    EmptyEvalSet,

    #[error("no eligible items for word completion")]
    NoEligibleItems,

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("subword/word alignment mismatch: {0}")]
    AlignmentMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
