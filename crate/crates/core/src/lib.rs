//! Data model, prompt rendering, filtering, fairness and diversity metrics
//! for counterfactual bias test cases.
//!
//! The fairness code is generic over [`Score`]; the aliases below fix the
//! common choices.

pub mod dataset;
pub mod diversity;
pub mod domain;
pub mod error;
pub mod fairness;
pub mod filter;
pub mod prompt;
pub mod report;
pub mod scalar;

pub use domain::{
    case_id, normalize_text, AnnotationRecord, AnnotationVerdict, BiasSpec, ConceptTriplet,
    EvalConfig, FilterStatus, RejectReason, SentenceVariant, SentimentOutput, Stage, TestCase,
    TestSet,
};
pub use error::{Error, Result};
pub use fairness::{
    bias_discovery_probability, evaluate_test_case, failure_rate_table, pair_differs,
    DiffReason, EvalMatrix, EvalVerdict, FailureRateTable, PairComparison, TriggeringPair,
};
pub use prompt::{ChatMessage, PromptKind, PromptLibrary, RenderedPrompt, Role};
pub use scalar::Score;

/// Exact scores, e.g. for thresholds and scores on a fixed grid.
pub type Rational = num_rational::Ratio<i64>;

pub type ExactOutput = SentimentOutput<Rational>;
pub type ExactConfig = EvalConfig<Rational>;
pub type ExactVerdict = EvalVerdict<Rational>;
pub type ExactMatrix = EvalMatrix<Rational>;
