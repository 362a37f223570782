use std::path::PathBuf;

use riskquad_backtest::BacktestError;
use riskquad_data::DataError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification mismatch: {0}")]
    Mismatch(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 1 for a verification mismatch, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch(_) => 1,
            _ => 2,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        match e {
            BacktestError::Config(_) | BacktestError::UnknownUniverse(_) => CliError::Config(e.to_string()),
            BacktestError::Lp(_) | BacktestError::Core(_) | BacktestError::Serialise(_) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}
