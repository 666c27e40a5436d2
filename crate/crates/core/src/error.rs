use thiserror::Error;

/// Unified error type for the whole laboratory.
///
/// Variants map one-to-one onto the failure classes of the public
/// operations: parameter and data validation, numeric domain limits,
/// and the structural failure modes of the Monte Carlo pipelines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("degenerate risk: {0}")]
    DegenerateRisk(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("truncation failure: {0}")]
    TruncationFailure(String),
    #[error("undefined estimator: {0}")]
    UndefinedEstimator(String),
    #[error("division domain error: {0}")]
    DivisionDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
