use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid experiment or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("graph has {vertices} vertices, exact solver accepts at most {limit}")]
    TooLarge { vertices: usize, limit: usize },

    #[error("schema mismatch in {path}: {reason}")]
    Schema { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors the CLI reports with the configuration exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
