use std::path::Path;
use std::sync::Arc;

use biascase_core::dataset::{load_testset, save_testset};
use biascase_core::filter::{dedupe, filter_identical_counterfactuals};
use biascase_core::{BiasSpec, ConceptTriplet, PromptLibrary, SentenceVariant, Stage, TestCase, TestSet};
use biascase_gateway::LlmClient;
use biascase_pipeline::{
    CaseMeta, EtsgSentence, FixtureScript, Pipeline, PipelineError, RunConfig, RunLog,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ensure_file, ensure_parent, read_json, summary, write_json};
use crate::args::{
    AugmentArgs, BtsArgs, CounterfactualArgs, EtsgArgs, GenFlags, GenerateArgs, RecordFixturesArgs,
};
use crate::error::{CliError, Result};
use crate::meta::CommandMeta;
use crate::settings::{ConfigFile, ProviderLayer};

#[derive(Debug, Serialize, Deserialize)]
pub struct TripletsFile {
    pub run_id: String,
    pub spec: BiasSpec,
    pub triplets: Vec<ConceptTriplet>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SentencesFile {
    pub run_id: String,
    pub spec: BiasSpec,
    pub sentences: Vec<EtsgSentence>,
    pub warnings: Vec<String>,
}

struct Resolved {
    config: RunConfig,
    prompts: PromptLibrary,
}

/// Merges flags, config file and environment. `spec` and `run_id` fill in
/// whatever none of those layers set, e.g. from a stage input file.
fn resolve(flags: &GenFlags, spec: Option<&BiasSpec>, run_id: Option<&str>) -> Result<Resolved> {
    let file = ConfigFile::locate(flags.config.as_deref())?;
    let provider = flags
        .provider_layer()
        .over(file.provider)
        .over(ProviderLayer::from_env()?)
        .resolve()?;
    let mut layer = flags.generation_layer().over(file.generation);
    if layer.run_id.is_none() {
        layer.run_id = run_id.map(str::to_string);
    }
    let spec = layer.spec(spec)?;
    Ok(Resolved {
        config: layer.run_config(spec, provider)?,
        prompts: layer.prompts()?,
    })
}

fn pipeline(r: Resolved) -> Result<Pipeline> {
    let client = LlmClient::from_config(r.config.provider.clone())?;
    Ok(Pipeline::with_client(r.config, r.prompts, Arc::new(client)))
}

fn echo_run(meta: &mut CommandMeta, p: &Pipeline, log: &RunLog) {
    meta.settings(json!({"run_id": p.run_id(), "config": p.config()}));
    let calls = p.client().counts();
    meta.count("calls", calls.calls);
    meta.count("attempts", calls.attempts);
    meta.count("cassette_hits", calls.cassette_hits);
    meta.warnings = log.warnings.clone();
}

pub async fn generate(a: GenerateArgs, meta: &mut CommandMeta, meta_path: &Path) -> Result<()> {
    ensure_parent(&a.out)?;
    let p = pipeline(resolve(&a.gen, None, None)?)?;
    let (set, metadata, error) = match p.run().await {
        Ok(out) => (Some(out.testset), out.metadata, None),
        Err(f) => (None, f.metadata, Some(f.error)),
    };
    if let Some(set) = &set {
        save_testset(set, &a.out)?;
    }
    write_json(meta_path, &metadata)?;
    meta.written_by_command = true;
    if let Some(e) = error {
        return Err(e.into());
    }
    let set = set.expect("successful run has a set");
    summary(json!({
        "command": "generate",
        "run_id": metadata.run_id,
        "out": a.out,
        "metadata": meta_path,
        "cases": set.len(),
        "active": set.active().count(),
        "warnings": metadata.warnings.len(),
    }));
    Ok(())
}

pub async fn bts(a: BtsArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_parent(&a.out)?;
    let p = pipeline(resolve(&a.gen, None, None)?)?;
    let mut log = RunLog::default();
    let result = p.run_bts(&mut log).await;
    echo_run(meta, &p, &log);
    let triplets = result?;
    meta.count("triplets", triplets.len());
    meta.output("triplets", &a.out);
    write_json(
        &a.out,
        &TripletsFile {
            run_id: p.run_id(),
            spec: p.config().spec.clone(),
            triplets,
            warnings: log.warnings,
        },
    )?;
    summary(json!({"command": "bts", "out": a.out, "triplets": meta.counts["triplets"]}));
    Ok(())
}

pub async fn etsg(a: EtsgArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.triplets)?;
    ensure_parent(&a.out)?;
    meta.input("triplets", &a.triplets)?;
    let input: TripletsFile = read_json(&a.triplets)?;
    let p = pipeline(resolve(&a.gen, Some(&input.spec), Some(&input.run_id))?)?;
    let mut log = RunLog::default();
    let sentences = p.run_etsg(&input.triplets, &mut log).await;
    echo_run(meta, &p, &log);
    meta.count("sentences", sentences.len());
    if sentences.is_empty() {
        return Err(PipelineError::Stage {
            stage: "etsg",
            message: "no triplet produced a sentence".into(),
        }
        .into());
    }
    meta.output("sentences", &a.out);
    write_json(
        &a.out,
        &SentencesFile {
            run_id: p.run_id(),
            spec: p.config().spec.clone(),
            sentences,
            warnings: log.warnings,
        },
    )?;
    summary(json!({"command": "etsg", "out": a.out, "sentences": meta.counts["sentences"]}));
    Ok(())
}

pub async fn counterfactual(a: CounterfactualArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.sentences)?;
    ensure_parent(&a.out)?;
    meta.input("sentences", &a.sentences)?;
    let input: SentencesFile = read_json(&a.sentences)?;
    let p = pipeline(resolve(&a.gen, Some(&input.spec), Some(&input.run_id))?)?;
    let sources = input
        .sentences
        .into_iter()
        .map(|s| {
            let meta = CaseMeta {
                concept_term: Some(s.triplet.concept_term),
                topic: Some(s.triplet.topic),
                parent_id: None,
            };
            (SentenceVariant::source(s.triplet.identity_term, s.text, Stage::Etsg), meta)
        })
        .collect();
    let mut log = RunLog::default();
    let cases = p.counterfactuals(sources, &mut log).await;
    echo_run(meta, &p, &log);
    let run_id = p.run_id();
    let mut set = TestSet::new(run_id.clone(), format!("generated:{run_id}"), cases);
    let flagged = filter_identical_counterfactuals(&mut set);
    set.sort_by_id();
    meta.count("cases", set.len());
    meta.count("identical_counterfactuals", flagged);
    meta.output("testset", &a.out);
    save_testset(&set, &a.out)?;
    summary(json!({"command": "counterfactual", "out": a.out, "cases": set.len(), "active": set.active().count()}));
    Ok(())
}

/// The spec a generated set was built from: its bias type and the identity
/// terms of its first ETSG tuple, whose variants follow spec order.
fn infer_spec(set: &TestSet) -> Option<BiasSpec> {
    let first = set.cases.iter().find(|c| c.stage() == Stage::Etsg)?;
    if set.cases.iter().any(|c| c.bias_type != first.bias_type) {
        return None;
    }
    BiasSpec::new(
        first.bias_type.clone(),
        first.variants.iter().map(|v| v.identity_term.clone()),
    )
    .ok()
}

pub async fn augment(a: AugmentArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.testset)?;
    ensure_parent(&a.out)?;
    meta.input("testset", &a.testset)?;
    let mut set = load_testset(&a.testset)?;
    let inferred = infer_spec(&set);
    let p = pipeline(resolve(&a.gen, inferred.as_ref(), Some(&set.name))?)?;
    // depth 1: only first-generation tuples are augmented
    let roots: Vec<TestCase> = set
        .active()
        .filter(|c| c.stage() == Stage::Etsg)
        .cloned()
        .collect();
    if roots.is_empty() {
        return Err(CliError::run("empty", format!("{} has no active ETSG cases", a.testset.display())));
    }
    let mut log = RunLog::default();
    let cfg = p.config();
    if cfg.enable_lda {
        let derived = p.run_lda(&roots, &mut log).await;
        set.cases.extend(derived);
    }
    if cfg.enable_syda {
        let derived = p.run_syda(&roots, &mut log).await;
        set.cases.extend(derived);
    }
    if cfg.enable_seda {
        let derived = p.run_seda(&roots, &mut log).await;
        set.cases.extend(derived);
    }
    filter_identical_counterfactuals(&mut set);
    let removed = dedupe(&mut set);
    set.sort_by_id();
    echo_run(meta, &p, &log);
    meta.count("roots", roots.len());
    meta.count("cases", set.len());
    meta.count("duplicates_removed", removed);
    meta.output("testset", &a.out);
    save_testset(&set, &a.out)?;
    summary(json!({"command": "augment", "out": a.out, "cases": set.len(), "active": set.active().count()}));
    Ok(())
}

pub fn record_fixtures(a: RecordFixturesArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.script)?;
    ensure_parent(&a.out)?;
    meta.input("script", &a.script)?;
    let prompts = match &a.prompts_dir {
        Some(dir) => PromptLibrary::from_dir(dir)?,
        None => PromptLibrary::builtin(),
    };
    let script = FixtureScript::load(&a.script)?;
    let n = script.write_cassette(&prompts, &a.model, a.temperature, &a.out)?;
    meta.settings(json!({"model_name": a.model, "temperature": a.temperature}));
    meta.count("records", n);
    meta.output("cassette", &a.out);
    summary(json!({"command": "record-fixtures", "out": a.out, "records": n}));
    Ok(())
}
