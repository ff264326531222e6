use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("simulation diverged in {submodel} at t={time:.3}s")]
    Diverged { submodel: &'static str, time: f64 },

    #[error("unknown scene `{0}`")]
    UnknownScene(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("external SUT: {0}")]
    External(String),

    #[error("cannot compute a verdict from an empty record list")]
    EmptyRecords,
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
