use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("cannot draw {k} measures from a pool of {pool}")]
    InvalidDrawSize { k: usize, pool: usize },
    #[error("weighted aggregation expects {expected} scores, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("cannot aggregate an empty score list")]
    EmptyScores,
    #[error("threshold interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("weights must be non-negative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange { name: &'static str, value: String, reason: &'static str },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("oracle input too long ({len} > {limit} characters)")]
pub struct OracleLimitExceeded {
    pub len: usize,
    pub limit: usize,
}
