use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid button count {0}: need one button per meaning and at most 1024")]
    InvalidButtonCount(u32),

    #[error("session already holds a complete PIN")]
    SessionComplete,

    #[error("signal kind does not match the session: {0}")]
    MixedSignalKinds(String),

    #[error("malformed signal: {0}")]
    MalformedSignal(String),

    #[error("every hypothesis has been eliminated")]
    NoValidHypothesis,

    #[error("training data holds a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sketch needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("audio clip is empty")]
    EmptyClip,

    #[error("embedder failed: {0}")]
    EmbedderFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid session state: {0}")]
    InvalidState(String),
}
