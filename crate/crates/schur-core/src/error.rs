//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller handed us something malformed (bad lengths, unnormalized
    /// amplitudes, out-of-domain parameters, unparseable files).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A dense materialization or enumeration would exceed the configured cap.
    #[error("{what}: requires {required} but the cap is {cap} (override with {env})")]
    CapExceeded {
        what: String,
        required: u64,
        cap: u64,
        env: &'static str,
    },

    /// An invariant the library maintains internally was violated. This is a
    /// bug in the library, not in the caller's input.
    #[error("internal consistency fault: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
