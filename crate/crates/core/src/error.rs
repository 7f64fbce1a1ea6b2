use thiserror::Error;

/// Errors surfaced by parsing, discovery, and verification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input at {location}: {message}")]
    Malformed { location: String, message: String },

    #[error("unknown lifecycle value '{value}' at {location}")]
    UnknownLifecycle { value: String, location: String },

    #[error("missing timestamp at {location}")]
    MissingTimestamp { location: String },

    #[error("no traces in log")]
    EmptyLog,

    #[error("unmatched {phase} event: activity '{label}' in case '{case_id}' at {timestamp}")]
    UnmatchedLifecycle {
        phase: String,
        label: String,
        case_id: String,
        timestamp: String,
    },

    #[error("epsilon {0} out of range [0,1]")]
    EpsilonOutOfRange(f64),

    #[error("eta {0} out of range [0,1]")]
    EtaOutOfRange(f64),

    #[error("node '{0}' is disconnected and cannot be repaired")]
    DisconnectedNode(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported OR-join context: {0}")]
    UnsupportedOrJoin(String),

    #[error("state bound of {bound} reached after exploring {explored} states")]
    BoundExhausted { bound: usize, explored: usize },

    #[error("model is not block-structured at node '{0}'")]
    Unstructured(String),

    #[error("refusing to simulate unsound model: {0}")]
    UnsoundModel(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
