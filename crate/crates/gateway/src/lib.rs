//! Generator-LLM access and scorer adapters.
//!
//! [`LlmClient`] sends rendered prompts to a chat-completions endpoint, or
//! records and replays replies through a [`Cassette`]. [`Scorer`] wraps the
//! sentiment models under test.

pub mod cassette;
pub mod client;
pub mod config;
pub mod error;
pub mod parse;
pub mod scorer;

pub use cassette::{cassette_key, Cassette, CassetteRecord};
pub use client::{BackendError, CallCounts, ChatBackend, ChatRequest, HttpBackend, LlmClient};
pub use config::{ProviderConfig, ProviderMode};
pub use error::{GatewayError, Result};
pub use parse::{parse_sentence_list, parse_triplet_list, SentenceList, TripletList};
pub use scorer::{FixtureTable, Scorer, ScorerConfig, ScorerFile, ScorerKind};
