use alloc::string::String;

/// Errors raised by the verification primitives.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(&'static str),

    #[error("UBM fingerprint mismatch: {expected:016x} vs {got:016x}")]
    FingerprintMismatch { expected: u64, got: u64 },

    #[error("training set needs samples from both classes")]
    SingleClass,

    #[error("unknown identifier: {0}")]
    UnknownId(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
