use thiserror::Error;

/// Errors produced by loading, validation, and the decision machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("invalid vertex: {0}")]
    InvalidVertex(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("oracle guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("malformed mechanism tree: {0}")]
    MalformedMechanism(String),

    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),

    #[error("certificate extraction precondition failed: {0}")]
    ExtractionPrecondition(String),

    #[error("formula error: {0}")]
    Formula(String),

    #[error("generator error: {0}")]
    Generator(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
