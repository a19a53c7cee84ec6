//! Test-case generation: concept sampling, sentence generation,
//! counterfactual pairing and three augmentation passes.
//!
//! ```text
//! BTS -> ETSG -> CSPG -> { LDA, SYDA, SEDA } -> CSPG
//! ```
//!
//! Every stage talks to the generator through a
//! [`biascase_gateway::LlmClient`], so a run can be recorded once and
//! replayed offline.

pub mod config;
pub mod error;
pub mod metadata;
pub mod script;
pub mod stages;

pub use config::RunConfig;
pub use error::{PipelineError, Result};
pub use metadata::{metadata_path, persist, RunMetadata};
pub use script::{FixtureScript, ScriptEntry};
pub use stages::{
    group_id, CaseMeta, EtsgSentence, Pipeline, PipelineFailure, PipelineOutput, RunLog,
    CSPG_CALL_FAILURE, CSPG_PARSE_FAILURE, SEDA_MAX_OUTPUTS,
};
