use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("degenerate nullification: instance already equals the baseline on features {features:?}")]
    DegenerateNullification { features: Vec<usize> },

    #[error("no decision boundary found: {0}")]
    NoBoundary(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
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
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn at_path(self, path: &std::path::Path) -> Self {
        Error::File {
            path: path.display().to_string(),
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } | Error::File { source, .. } => source.exit_code(),
            Error::Config(_) => 2,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Unsupported(_) => 3,
            Error::Numeric(_)
            | Error::UndefinedInput(_)
            | Error::DegenerateNullification { .. }
            | Error::NoBoundary(_) => 4,
        }
    }
}
