use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use biascase_core::dataset::save_testset;
use biascase_core::{Stage, TestSet};
use biascase_gateway::{CallCounts, ProviderMode};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::stages::Pipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderEcho {
    pub model_name: String,
    pub temperature: f64,
    pub mode: ProviderMode,
    pub base_url: String,
    pub cassette: Option<PathBuf>,
}

/// Written next to every generated test set. Holds no timestamps, so two
/// identical playback runs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub run_id: String,
    pub bias_type: String,
    pub identity_terms: Vec<String>,
    pub topics_per_bts_call: usize,
    pub bts_repeats: usize,
    pub sentences_per_concept: usize,
    pub stages_enabled: BTreeMap<String, bool>,
    pub provider: ProviderEcho,
    pub prompt_hashes: BTreeMap<String, String>,
    /// Intermediate counts (`bts_triplets`, `etsg_sentences`, ...) plus
    /// `cases:<STAGE>` per stage.
    pub stage_counts: BTreeMap<String, usize>,
    pub status_counts: BTreeMap<String, usize>,
    pub calls: CallCounts,
    pub warnings: Vec<String>,
    pub completed: bool,
    pub error: Option<String>,
}

impl RunMetadata {
    pub(crate) fn build(
        pipeline: &Pipeline,
        run_id: &str,
        set: &TestSet,
        mut stage_counts: BTreeMap<String, usize>,
        warnings: Vec<String>,
        error: Option<&PipelineError>,
    ) -> Self {
        let cfg = pipeline.config();
        let mut by_stage: BTreeMap<Stage, usize> = BTreeMap::new();
        let mut status_counts = BTreeMap::new();
        for case in &set.cases {
            *by_stage.entry(case.stage()).or_default() += 1;
            *status_counts.entry(case.filter_status.as_str().to_string()).or_default() += 1;
        }
        for (stage, n) in by_stage {
            stage_counts.insert(format!("cases:{}", stage.as_str()), n);
        }
        let provider = &pipeline.client().config();
        RunMetadata {
            run_id: run_id.to_string(),
            bias_type: cfg.spec.bias_type.clone(),
            identity_terms: cfg.spec.identity_terms.clone(),
            topics_per_bts_call: cfg.topics_per_bts_call,
            bts_repeats: cfg.bts_repeats,
            sentences_per_concept: cfg.sentences_per_concept,
            stages_enabled: BTreeMap::from([
                ("lda".to_string(), cfg.enable_lda),
                ("syda".to_string(), cfg.enable_syda),
                ("seda".to_string(), cfg.enable_seda),
            ]),
            provider: ProviderEcho {
                model_name: provider.model_name.clone(),
                temperature: provider.temperature,
                mode: provider.mode,
                base_url: provider.base_url.clone(),
                cassette: provider.cassette.clone(),
            },
            prompt_hashes: pipeline_hashes(pipeline),
            stage_counts,
            status_counts,
            calls: pipeline.client().counts(),
            warnings,
            completed: error.is_none(),
            error: error.map(|e| e.to_string()),
        }
    }

    pub fn cases_at(&self, stage: Stage) -> usize {
        self.stage_counts
            .get(&format!("cases:{}", stage.as_str()))
            .copied()
            .unwrap_or(0)
    }
}

fn pipeline_hashes(pipeline: &Pipeline) -> BTreeMap<String, String> {
    pipeline
        .prompts()
        .hashes()
        .into_iter()
        .map(|(k, v)| (k.as_str().to_string(), v))
        .collect()
}

/// `out.jsonl` gets its metadata at `out.meta.json`.
pub fn metadata_path(testset_path: &Path) -> PathBuf {
    testset_path.with_extension("meta.json")
}

/// Writes the test set and its metadata file. Returns the metadata path.
pub fn persist(set: &TestSet, metadata: &RunMetadata, out: &Path) -> Result<PathBuf> {
    save_testset(set, out).map_err(PipelineError::Core)?;
    let meta = metadata_path(out);
    let mut body = serde_json::to_string_pretty(metadata)?;
    body.push('\n');
    std::fs::write(&meta, body)?;
    Ok(meta)
}
