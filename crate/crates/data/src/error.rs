use std::path::PathBuf;

use chrono::NaiveDate;
use riskquad_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: malformed CSV: {message}")]
    Csv { context: String, message: String },

    #[error("nonpositive price {value} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: NaiveDate,
        value: f64,
    },

    #[error("at least {needed} dates required, got {got}")]
    TooFewDates { needed: usize, got: usize },

    #[error("macro series has no observation on or before {0}")]
    MacroCoverage(NaiveDate),

    #[error("selection mask picks no days")]
    EmptySelection,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("fetching {ticker} failed: {message}")]
    Http { ticker: String, message: String },

    #[error("no price data returned for any requested ticker")]
    EmptyResult,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, DataError>;
