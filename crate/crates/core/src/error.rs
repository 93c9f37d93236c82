use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("linear system is singular (non-episodic chain with discount 1?)")]
    Singular,

    #[error("episode exceeded {limit} transitions without reaching a terminal state")]
    EpisodeTooLong { limit: usize },

    #[error("state {0} out of range")]
    StateOutOfRange(usize),

    #[error("empty state mask")]
    EmptyMask,

    #[error("sampled trace required when eta > 0")]
    MissingSampledTrace,

    #[error("vector of length {0} cannot be laid out as a square grid")]
    NotSquare(usize),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
}
