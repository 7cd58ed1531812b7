use thiserror::Error;

/// Errors raised across the structure-learning pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtbnError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("chain has no unique stationary distribution")]
    NoUniqueStationary,

    #[error("triple (w={w}, {s}->{sp}) has zero occupation time")]
    DegenerateTriple { w: usize, s: u8, sp: u8 },

    #[error("bound is undefined: {0}")]
    UndefinedBound(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("power is undefined for an empty true edge set")]
    UndefinedPower,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CtbnError>;

impl CtbnError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CtbnError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for CtbnError {
    fn from(e: serde_json::Error) -> Self {
        CtbnError::Parse(e.to_string())
    }
}
