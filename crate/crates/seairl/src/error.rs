use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// configuration problems exit 2, numeric aborts exit 3, I/O and file
/// format problems exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration: unknown keys, invalid shapes, out-of-range
    /// hyperparameters, unknown scenarios.
    #[error("configuration error: {0}")]
    Config(String),
    /// Non-finite values where finite ones are required, or divergence.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Malformed on-disk artifacts (demos, checkpoints, configs).
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numeric(_) => 3,
            Error::Format(_) | Error::Io(_) => 4,
        }
    }
}
