//! Authoring cassettes from scripted replies.
//!
//! A script lists prompt arguments and the reply to record for each. Every
//! entry is rendered with the prompt library, keyed like a live request and
//! appended to a cassette, so a pipeline run in playback mode sees exactly
//! what a recorded run would have seen.

use std::path::Path;

use biascase_core::{BiasSpec, PromptLibrary, RenderedPrompt};
use biascase_gateway::{cassette_key, Cassette, CassetteRecord};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE", deny_unknown_fields)]
pub enum ScriptEntry {
    Bdp {
        n: usize,
        bias_type: String,
        identity_terms: Vec<String>,
        #[serde(default)]
        sample: u32,
        reply: String,
    },
    Sgp {
        n: usize,
        identity_term: String,
        concept_term: String,
        reply: String,
    },
    Cfsp {
        term: String,
        other: String,
        sentences: Vec<String>,
        reply: String,
    },
    Ldp {
        sentence: String,
        reply: String,
    },
    Sydp {
        sentences: Vec<String>,
        reply: String,
    },
    Sedp {
        sentences: Vec<String>,
        reply: String,
    },
}

impl ScriptEntry {
    pub fn render(&self, prompts: &PromptLibrary) -> Result<(RenderedPrompt, u32)> {
        let rendered = match self {
            ScriptEntry::Bdp {
                n,
                bias_type,
                identity_terms,
                sample,
                ..
            } => {
                let spec = BiasSpec::new(bias_type.as_str(), identity_terms.iter().map(String::as_str))?;
                return Ok((prompts.bias_definition(*n, &spec)?, *sample));
            }
            ScriptEntry::Sgp {
                n,
                identity_term,
                concept_term,
                ..
            } => prompts.sentence_generation(*n, identity_term, concept_term)?,
            ScriptEntry::Cfsp {
                term,
                other,
                sentences,
                ..
            } => prompts.counterfactual(term, other, sentences)?,
            ScriptEntry::Ldp { sentence, .. } => prompts.lexical(sentence)?,
            ScriptEntry::Sydp { sentences, .. } => prompts.syntactic(sentences)?,
            ScriptEntry::Sedp { sentences, .. } => prompts.semantic(sentences)?,
        };
        Ok((rendered, 0))
    }

    pub fn reply(&self) -> &str {
        match self {
            ScriptEntry::Bdp { reply, .. }
            | ScriptEntry::Sgp { reply, .. }
            | ScriptEntry::Cfsp { reply, .. }
            | ScriptEntry::Ldp { reply, .. }
            | ScriptEntry::Sydp { reply, .. }
            | ScriptEntry::Sedp { reply, .. } => reply,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureScript {
    pub entries: Vec<ScriptEntry>,
}

impl FixtureScript {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Builds cassette records in script order. Two entries that address the
    /// same prompt and sample are an error.
    pub fn records(&self, prompts: &PromptLibrary, model_name: &str, temperature: f64) -> Result<Vec<CassetteRecord>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(self.entries.len());
        for (index, entry) in self.entries.iter().enumerate() {
            let (prompt, sample) = entry.render(prompts).map_err(|e| PipelineError::Script {
                index,
                message: e.to_string(),
            })?;
            let key = cassette_key(&prompt.messages, model_name, temperature);
            if !seen.insert((key.clone(), sample)) {
                return Err(PipelineError::Script {
                    index,
                    message: format!("duplicate {} prompt", prompt.prompt_kind),
                });
            }
            out.push(CassetteRecord {
                prompt_hash: key,
                sample,
                prompt_kind: prompt.prompt_kind,
                model_name: model_name.to_string(),
                temperature,
                input: prompt.last_user().to_string(),
                reply: entry.reply().to_string(),
            });
        }
        Ok(out)
    }

    /// Writes a new cassette. Refuses to touch an existing file.
    pub fn write_cassette(
        &self,
        prompts: &PromptLibrary,
        model_name: &str,
        temperature: f64,
        path: &Path,
    ) -> Result<usize> {
        if path.exists() {
            return Err(PipelineError::Config(format!("{} already exists", path.display())));
        }
        let records = self.records(prompts, model_name, temperature)?;
        let cassette = Cassette::open_for_record(path)?;
        let n = records.len();
        for r in records {
            cassette.append(r)?;
        }
        Ok(n)
    }
}
