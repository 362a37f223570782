use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),

    #[error("loss sample must be nonempty")]
    EmptySample,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("weights do not form a simplex: {0}")]
    NotSimplex(String),

    #[error("weights are not non-decreasing at index {0}")]
    NotMonotone(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty weight set")]
    EmptyWeightSet,

    #[error("scenario set must contain at least one scenario")]
    EmptyScenarioSet,

    #[error("duplicate scenario id {0:?}")]
    DuplicateScenario(String),

    #[error("scenario {0:?} must have at least one sample")]
    ZeroSampleCount(String),

    #[error("invalid density weighting: {0}")]
    InvalidDensity(String),

    #[error("axioms violated: {0}")]
    AxiomsViolated(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
