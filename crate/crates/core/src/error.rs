use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The source could not be read or decoded.
    #[error("input error: {0}")]
    Input(String),

    /// An option, parameter or range was invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// Rows or columns do not agree on a schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The data cannot support the requested computation.
    #[error("{0}")]
    Data(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable code for the error family.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Input(_) | Error::Io(_) => "INPUT",
            Error::Config(_) => "CONFIG",
            Error::Schema(_) | Error::Csv(_) | Error::Json(_) => "SCHEMA",
            Error::Data(_) => "DATA",
            Error::Fold { .. } => "TRAIN",
        }
    }

    /// Whether the error stems from invalid configuration or input
    /// validation rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Input(_) | Error::Schema(_))
    }
}
