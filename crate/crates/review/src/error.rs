use thiserror::Error;

pub type Result<T, E = ReviewError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("annotation log {path}, line {line}: {message}")]
    Log {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown case {0}")]
    NotFound(String),

    #[error("{0}")]
    Invalid(String),

    #[error("annotator `{annotator}` already judged case {case_id}")]
    Conflict { case_id: String, annotator: String },

    #[error(transparent)]
    Core(#[from] biascase_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ReviewError {
    pub fn kind(&self) -> &'static str {
        match self {
            ReviewError::Log { .. } => "annotation-log",
            ReviewError::NotFound(_) => "not-found",
            ReviewError::Invalid(_) => "invalid",
            ReviewError::Conflict { .. } => "conflict",
            ReviewError::Core(e) => e.kind(),
            ReviewError::Io(_) => "io",
            ReviewError::Json(_) => "json",
        }
    }
}
