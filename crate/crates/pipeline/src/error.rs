use thiserror::Error;

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("fixture script entry {index}: {message}")]
    Script { index: usize, message: String },

    #[error(transparent)]
    Gateway(#[from] biascase_gateway::GatewayError),

    #[error(transparent)]
    Core(#[from] biascase_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Stage { .. } => "pipeline-stage",
            PipelineError::Script { .. } => "script",
            PipelineError::Gateway(e) => e.kind(),
            PipelineError::Core(e) => e.kind(),
            PipelineError::Io(_) => "io",
            PipelineError::Json(_) => "json",
        }
    }
}
