use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bias spec: {0}")]
    InvalidSpec(String),

    #[error("malformed test case: {0}")]
    MalformedCase(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("count must be at least 1")]
    InvalidCount,

    #[error("counterfactual term and replacement are both `{0}`")]
    DegenerateCounterfactual(String),

    #[error("prompt template `{template}` left placeholder `{{{name}}}` unfilled")]
    UnfilledPlaceholder { template: String, name: String },

    #[error("prompt template `{0}` is malformed: {1}")]
    PromptTemplate(String, String),

    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(String),

    #[error("case {case_id}: expected {expected} outputs, got {got}")]
    IncompleteScoring {
        case_id: String,
        expected: usize,
        got: usize,
    },

    #[error("case {0} is not active")]
    InactiveCase(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("evaluation matrix is sparse ({0} skipped cells)")]
    IncompleteMatrix(usize),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("tagger failed: {0}")]
    Tagger(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used by the CLI's error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid-spec",
            Error::MalformedCase(_) => "malformed-case",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InvalidCount => "invalid-count",
            Error::DegenerateCounterfactual(_) => "degenerate-counterfactual",
            Error::UnfilledPlaceholder { .. } => "unfilled-placeholder",
            Error::PromptTemplate(..) => "prompt-template",
            Error::InvalidThreshold(_) => "invalid-threshold",
            Error::IncompleteScoring { .. } => "incomplete-scoring",
            Error::InactiveCase(_) => "inactive-case",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::IncompleteMatrix(_) => "incomplete-matrix",
            Error::Integrity(_) => "integrity",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Empty(_) => "empty",
            Error::Tagger(_) => "tagger",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
