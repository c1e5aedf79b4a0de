//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the narrative classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown label {value:?} at line {line}")]
    UnknownLabel { line: usize, value: String },

    #[error("document {id:?} has no label but one is required")]
    MissingLabel { id: String },

    #[error("fold count k={k} is invalid; need k >= 2")]
    BadFoldCount { k: usize },

    #[error("duplicate document id {id:?}")]
    DuplicateId { id: String },

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("no embedding for document id {id:?}")]
    MissingEmbedding { id: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss term {term} at epoch {epoch}, batch {batch}")]
    NonFinite {
        term: &'static str,
        epoch: usize,
        batch: usize,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
