use thiserror::Error;

pub type Result<T, E = GatewayError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("no recorded reply for prompt {0}")]
    FixtureMiss(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("nothing could be parsed from the reply")]
    EmptyParse,

    #[error("cassette {path}, line {line}: {message}")]
    Cassette {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] biascase_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GatewayError {
    pub fn kind(&self) -> &'static str {
        match self {
            GatewayError::Config(_) => "config",
            GatewayError::Transport { .. } => "transport",
            GatewayError::FixtureMiss(_) => "fixture-miss",
            GatewayError::Protocol(_) => "protocol",
            GatewayError::EmptyParse => "empty-parse",
            GatewayError::Cassette { .. } => "cassette",
            GatewayError::Core(e) => e.kind(),
            GatewayError::Io(_) => "io",
            GatewayError::Json(_) => "json",
        }
    }
}
