use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("TDD configuration id {0} out of range (expected 0..=6)")]
    ConfigIdOutOfRange(u32),

    #[error("subframe index {0} out of range (expected 0..=9)")]
    SubframeOutOfRange(usize),

    #[error("malformed bit string {0:?}")]
    MalformedBits(String),

    #[error("layout placement failed: {0}")]
    Placement(String),

    #[error("invalid distance {0} m")]
    InvalidDistance(f64),

    #[error("cell {0} has no scheduled transmitter in this subframe")]
    NoTransmitter(usize),

    #[error("cell {cell} is not in {expected} this subframe")]
    WrongDirection { cell: usize, expected: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
