use thiserror::Error;

/// Errors raised by the capability toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Bytes or text that do not follow the wire or file formats.
    #[error("malformed input: {0}")]
    Malformed(String),
    /// Well-formed input that violates a capability invariant.
    #[error("invalid capability: {0}")]
    InvalidCapability(String),
    #[error("invalid validity period: {0}")]
    InvalidValidity(String),
    #[error("seed must be 32 bytes, got {0}")]
    BadSeed(usize),
    #[error("tuple not found in authorization store")]
    NotFound,
    #[error("queried tuple is not in the authorization store")]
    NotAuthorizedInStore,
    #[error("serial counter exhausted")]
    SerialExhausted,
    #[error("duplicate serial {0} from one grantor")]
    DuplicateSerial(u64),
    #[error("capabilities from more than one grantor")]
    MixedGrantors,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
