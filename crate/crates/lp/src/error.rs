use riskquad_core::CoreError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid portfolio problem: {0}")]
    InvalidProblem(String),

    #[error("scenario index {index} out of range for {count} scenarios")]
    ScenarioOutOfRange { index: usize, count: usize },

    #[error("MPS parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, LpError>;
