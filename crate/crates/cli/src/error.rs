use serde_json::json;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{message}")]
    Run { kind: &'static str, message: String },
}

/// Kinds that mean the invocation itself was wrong rather than the run.
const USAGE_KINDS: [&str; 6] = [
    "usage",
    "config",
    "invalid-argument",
    "invalid-spec",
    "invalid-threshold",
    "invalid-count",
];

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn run(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Run {
            kind,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Run { kind, .. } => kind,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if USAGE_KINDS.contains(&self.kind()) {
            2
        } else {
            1
        }
    }

    /// The single line written to stderr on failure.
    pub fn to_json(&self) -> String {
        json!({"error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code()}).to_string()
    }
}

macro_rules! with_kind {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::run(e.kind(), e.to_string())
            }
        }
    )*};
}

with_kind!(
    biascase_core::Error,
    biascase_gateway::GatewayError,
    biascase_pipeline::PipelineError,
    biascase_review::ReviewError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::run("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::run("json", e.to_string())
    }
}
