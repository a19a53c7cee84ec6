use std::collections::BTreeMap;

use biascase_core::{BiasSpec, PromptKind};
use biascase_gateway::ProviderConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

fn default_topics() -> usize {
    5
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: BiasSpec,
    /// `N` for the bias definition prompt.
    #[serde(default = "default_topics")]
    pub topics_per_bts_call: usize,
    #[serde(default = "one")]
    pub bts_repeats: usize,
    /// `N` for the sentence generation prompt.
    #[serde(default = "one")]
    pub sentences_per_concept: usize,
    #[serde(default = "yes")]
    pub enable_lda: bool,
    #[serde(default = "yes")]
    pub enable_syda: bool,
    #[serde(default = "yes")]
    pub enable_seda: bool,
    #[serde(default)]
    pub provider: ProviderConfig,
    /// Derived from the configuration when absent.
    #[serde(default)]
    pub run_id: Option<String>,
}

impl RunConfig {
    pub fn new(spec: BiasSpec, provider: ProviderConfig) -> Self {
        RunConfig {
            spec,
            topics_per_bts_call: default_topics(),
            bts_repeats: 1,
            sentences_per_concept: 1,
            enable_lda: true,
            enable_syda: true,
            enable_seda: true,
            provider,
            run_id: None,
        }
    }

    pub fn without_augmentation(mut self) -> Self {
        self.enable_lda = false;
        self.enable_syda = false;
        self.enable_seda = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        for (name, v) in [
            ("topics_per_bts_call", self.topics_per_bts_call),
            ("bts_repeats", self.bts_repeats),
            ("sentences_per_concept", self.sentences_per_concept),
        ] {
            if v == 0 {
                return Err(PipelineError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.run_id.as_deref().is_some_and(|r| r.trim().is_empty()) {
            return Err(PipelineError::Config("run_id is empty".into()));
        }
        self.provider.validate()?;
        Ok(())
    }

    /// The configured run id, or one derived from everything that shapes
    /// the output: spec, counts, stage flags, model, temperature and prompt
    /// templates. Provider mode and cassette path are left out so that a
    /// recorded run and its playback share an id.
    pub fn resolved_run_id(&self, prompt_hashes: &BTreeMap<PromptKind, String>) -> String {
        if let Some(id) = &self.run_id {
            return id.clone();
        }
        let material = serde_json::json!({
            "spec": self.spec,
            "topics_per_bts_call": self.topics_per_bts_call,
            "bts_repeats": self.bts_repeats,
            "sentences_per_concept": self.sentences_per_concept,
            "stages": [self.enable_lda, self.enable_syda, self.enable_seda],
            "model": self.provider.model_name,
            "temperature": self.provider.temperature,
            "prompts": prompt_hashes,
        });
        let digest = Sha256::digest(material.to_string().as_bytes());
        format!("{}-{}", self.spec.bias_type.replace(' ', "_"), &hex::encode(digest)[..12])
    }
}
