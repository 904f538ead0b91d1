use thiserror::Error;

pub type Result<T> = std::result::Result<T, KakeyaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KakeyaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidSpec(String),

    #[error("configuration is not antipodally even (defect {defect:.3e})")]
    NotEven { defect: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample passes through the origin at index {index}")]
    ThroughOrigin { index: usize },

    #[error("adjacent samples {index} and {next} subtend {angle:.4} rad; refine the loop")]
    CoarseSampling { index: usize, next: usize, angle: f64 },

    #[error("logarithm undefined: {0}")]
    LogUndefined(String),

    #[error("invalid group table: {0}")]
    InvalidGroup(String),

    #[error("image approaches the omitted point (alignment {alignment})")]
    PointNotOmitted { alignment: f64 },

    #[error("search space too large: {0}")]
    SearchTooLarge(String),
}
