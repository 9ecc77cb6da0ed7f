use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid neuron model `{name}`: {reason}")]
    InvalidModel { name: String, reason: String },
    #[error("unknown neuron model `{0}`")]
    UnknownModel(String),
    #[error("synapse from `{source_key}` targets unknown neuron `{target}`")]
    DanglingTarget { source_key: String, target: String },
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("duplicate synapse `{source_key}` -> `{target}`")]
    DuplicateSynapse { source_key: String, target: String },
    #[error("weight {weight} does not fit in a signed 16-bit integer")]
    WeightOverflow { weight: i64 },
    #[error("`{source_key}` has fan-out {fan_out}, limit is {limit}")]
    FanOutExceeded {
        source_key: String,
        fan_out: usize,
        limit: usize,
    },
    #[error("output key `{0}` is not a neuron")]
    UnknownOutputKey(String),
    #[error("unknown axon `{0}`")]
    UnknownAxonKey(String),
    #[error("unknown neuron `{0}`")]
    UnknownNeuronKey(String),
    #[error("no synapse `{pre}` -> `{post}`")]
    NoSuchSynapse { pre: String, post: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("HBM capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("degenerate regression input: {0}")]
    DegenerateInput(String),
    #[error("shape mismatch at layer {layer}: {reason}")]
    ShapeMismatch { layer: usize, reason: String },
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
