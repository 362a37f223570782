use chrono::NaiveDate;
use riskquad_core::CoreError;
use riskquad_data::DataError;
use riskquad_lp::LpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cutoff {cutoff} lies outside the window {start}..={end}")]
    CutoffOutsideWindow {
        cutoff: NaiveDate,
        start: NaiveDate,
        end: NaiveDate,
    },

    #[error("the {0} segment of the window is empty")]
    EmptySegment(&'static str),

    #[error("window of {needed} days requested but only {available} are available")]
    ShortData { needed: usize, available: usize },

    #[error("month {0} is not covered by the index series")]
    MonthAbsent(String),

    #[error("unknown universe {0:?}")]
    UnknownUniverse(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("report serialisation failed: {0}")]
    Serialise(String),
}

pub type Result<T> = std::result::Result<T, BacktestError>;
