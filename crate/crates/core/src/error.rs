use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch { context: String, expected: usize, actual: usize },

    #[error("matrix `{name}` is not symmetric positive definite")]
    NotPositiveDefinite { name: String },

    #[error("matrix `{name}` is not symmetric")]
    NotSymmetric { name: String },

    #[error("simulator `{simulator}` failed at x = {input:?}: {message}")]
    Simulator { simulator: String, input: Vec<f64>, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown catalog problem `{0}`")]
    UnknownProblem(String),

    #[error("point {point:?} lies outside the search domain [{lower}, {upper}]")]
    OutsideDomain { point: Vec<f64>, lower: f64, upper: f64 },

    #[error("no active subspace is available for this problem")]
    ActiveSubspaceUnavailable,

    #[error("result has no maximizer for objective {0}")]
    MissingObjective(usize),

    #[error("run aborted after {} simulation records: {cause}", partial.len())]
    RunAborted { cause: Box<Error>, partial: Vec<crate::hdbo::SimulationRecord> },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch { context: context.into(), expected, actual }
    }
}
