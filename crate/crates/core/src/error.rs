use std::io;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("fields `{first}` and `{second}` overlap")]
    Overlap { first: String, second: String },

    #[error("duplicate field name `{0}`")]
    DuplicateField(String),

    #[error("{file}:{line}: line has {actual} characters, record needs {expected}")]
    ShortLine {
        file: String,
        line: usize,
        expected: usize,
        actual: usize,
    },

    #[error("{file}:{line}: non-ASCII input")]
    NonAscii { file: String, line: usize },

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("age {0} is outside 0..=120")]
    AgeOutOfRange(i64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),

    #[error("malformed probability distribution at row {row}: {detail}")]
    Distribution { row: usize, detail: String },

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
