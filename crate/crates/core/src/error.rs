use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// The regularized normal equations could not be factorized.
    #[error("singular system: Gram matrix of dimension {dim} has numerical rank {rank}")]
    Singular { rank: usize, dim: usize },

    /// No corrupted sample occurred in any noisy trial.
    #[error("NTrain(eta) is undefined: no corrupted sample occurred in any trial")]
    UndefinedNTrain,

    #[error("insufficient trials: got {got}, need at least {need}")]
    InsufficientTrials { got: usize, need: usize },

    #[error("trainer failed in trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("enumeration limit exceeded: {patterns} noise patterns (limit {limit})")]
    EnumerationLimit { patterns: u128, limit: u128 },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("report format error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
