//! The generation stages. Each stage fans its items out concurrently; the
//! client's semaphore bounds in-flight requests. Results and warnings are
//! collected in input order, so output never depends on completion order.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use biascase_core::filter::{dedupe, filter_identical_counterfactuals};
use biascase_core::{
    normalize_text, ConceptTriplet, FilterStatus, PromptLibrary, RenderedPrompt, SentenceVariant,
    Stage, TestCase, TestSet,
};
use biascase_gateway::{parse_sentence_list, parse_triplet_list, GatewayError, LlmClient};
use futures::future::join_all;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::metadata::RunMetadata;

pub const CSPG_PARSE_FAILURE: &str = "cspg-parse-failure";
pub const CSPG_CALL_FAILURE: &str = "cspg-call-failure";
pub const SEDA_MAX_OUTPUTS: usize = 20;
const LDA_OUTPUTS: usize = 4;

/// An ETSG sentence with the triplet it was generated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtsgSentence {
    pub triplet: ConceptTriplet,
    pub text: String,
}

/// Case attributes carried from a source sentence onto its tuple.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub concept_term: Option<String>,
    pub topic: Option<String>,
    pub parent_id: Option<String>,
}

impl CaseMeta {
    fn of(case: &TestCase) -> Self {
        CaseMeta {
            concept_term: case.concept_term.clone(),
            topic: case.topic.clone(),
            parent_id: Some(case.id.clone()),
        }
    }
}

/// Warnings collected while a run progresses.
#[derive(Debug, Default, Clone)]
pub struct RunLog {
    pub warnings: Vec<String>,
}

impl RunLog {
    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

pub struct PipelineOutput {
    pub testset: TestSet,
    pub metadata: RunMetadata,
}

/// A run that stopped at a fatal stage error, with whatever it had built.
#[derive(Debug)]
pub struct PipelineFailure {
    pub error: PipelineError,
    pub partial: TestSet,
    pub metadata: RunMetadata,
}

impl std::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} partial case(s))", self.error, self.partial.len())
    }
}

impl std::error::Error for PipelineFailure {}

pub struct Pipeline {
    config: RunConfig,
    prompts: PromptLibrary,
    client: Arc<LlmClient>,
}

impl Pipeline {
    /// Builds the client from `config.provider`.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let client = LlmClient::from_config(config.provider.clone())?;
        Ok(Self::with_client(config, PromptLibrary::builtin(), Arc::new(client)))
    }

    pub fn with_client(config: RunConfig, prompts: PromptLibrary, client: Arc<LlmClient>) -> Self {
        Pipeline {
            config,
            prompts,
            client,
        }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn prompts(&self) -> &PromptLibrary {
        &self.prompts
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }

    pub fn run_id(&self) -> String {
        self.config.resolved_run_id(&self.prompts.hashes())
    }

    /// Samples concept triplets, repeating the bias definition prompt
    /// `bts_repeats` times. Topics already seen in an earlier repeat are
    /// dropped, as are repeated (identity term, concept term) pairs.
    pub async fn run_bts(&self, log: &mut RunLog) -> Result<Vec<ConceptTriplet>> {
        let spec = &self.config.spec;
        let prompt = self.prompts.bias_definition(self.config.topics_per_bts_call, spec)?;
        let replies = join_all(
            (0..self.config.bts_repeats).map(|r| self.client.complete(&prompt, r as u32)),
        )
        .await;

        let mut seen_topics: HashSet<String> = HashSet::new();
        let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
        let mut out = Vec::new();
        let mut parsed_any = false;
        for (r, reply) in replies.into_iter().enumerate() {
            let list = match reply.and_then(|text| parse_triplet_list(&text, spec)) {
                Ok(list) => list,
                Err(e) => {
                    log.warn(format!("bts repeat {r}: {e}"));
                    continue;
                }
            };
            parsed_any = true;
            let topics_here: HashSet<String> =
                list.triplets.iter().map(|t| normalize_text(&t.topic)).collect();
            let (mut overlap, mut repeated) = (0, 0);
            for t in list.triplets {
                if seen_topics.contains(&normalize_text(&t.topic)) {
                    overlap += 1;
                    continue;
                }
                let pair = (normalize_text(&t.identity_term), normalize_text(&t.concept_term));
                if !seen_pairs.insert(pair) {
                    repeated += 1;
                    continue;
                }
                out.push(t);
            }
            if overlap + repeated > 0 {
                log.warn(format!(
                    "bts repeat {r}: dropped {overlap} triplet(s) on seen topics and {repeated} repeated concept(s)"
                ));
            }
            seen_topics.extend(topics_here);
        }
        if !parsed_any {
            return Err(PipelineError::Stage {
                stage: "bts",
                message: format!("none of {} call(s) produced a triplet", self.config.bts_repeats),
            });
        }
        for term in &spec.identity_terms {
            if !out.iter().any(|t| &t.identity_term == term) {
                log.warn(format!("bts: no concept for identity term `{term}`"));
            }
        }
        Ok(out)
    }

    /// One sentence generation call per triplet. Triplets whose reply cannot
    /// be parsed are skipped.
    pub async fn run_etsg(&self, triplets: &[ConceptTriplet], log: &mut RunLog) -> Vec<EtsgSentence> {
        let n = self.config.sentences_per_concept;
        let replies = join_all(triplets.iter().map(|t| async move {
            let prompt = self.prompts.sentence_generation(n, &t.identity_term, &t.concept_term)?;
            let reply = self.client.complete(&prompt, 0).await?;
            Ok::<_, GatewayError>(parse_sentence_list(&reply, Some(n))?)
        }))
        .await;
        let mut out = Vec::new();
        for (t, reply) in triplets.iter().zip(replies) {
            match reply {
                Ok(list) => {
                    if list.count_mismatch {
                        log.warn(format!(
                            "etsg ({}, {}): asked for {n} sentence(s), parsed {}",
                            t.identity_term,
                            t.concept_term,
                            list.sentences.len()
                        ));
                    }
                    out.extend(list.sentences.into_iter().map(|text| EtsgSentence {
                        triplet: t.clone(),
                        text,
                    }));
                }
                Err(e) => log.warn(format!("etsg ({}, {}): skipped: {e}", t.identity_term, t.concept_term)),
            }
        }
        out
    }

    /// Builds the counterfactual tuple for one source sentence: one call per
    /// other identity term. Variants follow the spec's term order. A failed
    /// call leaves the source text in that slot and filters the case.
    pub async fn run_cspg(&self, source: SentenceVariant, meta: CaseMeta) -> Result<(TestCase, Vec<String>)> {
        let spec = &self.config.spec;
        if !spec.identity_terms.contains(&source.identity_term) {
            return Err(PipelineError::Config(format!(
                "source term `{}` is not in the bias spec",
                source.identity_term
            )));
        }
        let others: Vec<&String> = spec
            .identity_terms
            .iter()
            .filter(|t| **t != source.identity_term)
            .collect();
        let input = [source.text.clone()];
        let replies = join_all(others.iter().map(|other| {
            let input = &input;
            let term = &source.identity_term;
            async move {
                let prompt: RenderedPrompt = self.prompts.counterfactual(term, other, input)?;
                let reply = self.client.complete(&prompt, 0).await?;
                parse_sentence_list(&reply, Some(1))
            }
        }))
        .await;

        let mut warnings = Vec::new();
        let mut failure: Option<&'static str> = None;
        let mut texts: BTreeMap<&str, String> = BTreeMap::new();
        for (other, reply) in others.iter().zip(replies) {
            let text = match reply {
                Ok(list) => {
                    if list.count_mismatch {
                        warnings.push(format!(
                            "cspg `{}` -> {other}: {} sentences parsed, kept the first",
                            source.text,
                            list.sentences.len()
                        ));
                    }
                    list.sentences.into_iter().next().expect("non-empty parse")
                }
                Err(e) => {
                    let reason = match e {
                        GatewayError::EmptyParse => CSPG_PARSE_FAILURE,
                        _ => CSPG_CALL_FAILURE,
                    };
                    failure.get_or_insert(reason);
                    warnings.push(format!("cspg `{}` -> {other}: {e}", source.text));
                    source.text.clone()
                }
            };
            texts.insert(other.as_str(), text);
        }
        let variants = spec
            .identity_terms
            .iter()
            .map(|term| {
                if *term == source.identity_term {
                    source.clone()
                } else {
                    SentenceVariant::counterfactual(term, texts.remove(term.as_str()).expect("one per term"), source.stage)
                }
            })
            .collect();
        let mut case = TestCase::new(&spec.bias_type, variants)?
            .with_concept(meta.concept_term, meta.topic)
            .with_parent(meta.parent_id);
        if let Some(reason) = failure {
            case.mark(FilterStatus::AutoFiltered, reason);
        }
        Ok((case, warnings))
    }

    /// Runs CSPG over many sources, keeping input order.
    pub async fn counterfactuals(&self, sources: Vec<(SentenceVariant, CaseMeta)>, log: &mut RunLog) -> Vec<TestCase> {
        let results = join_all(sources.into_iter().map(|(s, m)| self.run_cspg(s, m))).await;
        let mut out = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok((case, warnings)) => {
                    for w in warnings {
                        log.warn(w);
                    }
                    out.push(case);
                }
                Err(e) => log.warn(format!("cspg: skipped: {e}")),
            }
        }
        out
    }

    /// Lexical augmentation: four rewrites per active case. Replies one and
    /// two are synonym rewrites, three and four negated ones.
    pub async fn run_lda(&self, cases: &[TestCase], log: &mut RunLog) -> Vec<TestCase> {
        let cases: Vec<&TestCase> = cases.iter().filter(|c| c.is_active()).collect();
        let replies = join_all(cases.iter().map(|c| async move {
            let source = c.source().expect("generated cases have a source");
            let prompt = self.prompts.lexical(&source.text)?;
            let reply = self.client.complete(&prompt, 0).await?;
            parse_sentence_list(&reply, Some(LDA_OUTPUTS))
        }))
        .await;
        let mut sources = Vec::new();
        for (case, reply) in cases.iter().zip(replies) {
            let term = &case.source().expect("source").identity_term;
            match reply {
                Ok(list) => {
                    if list.count_mismatch {
                        log.warn(format!(
                            "lda {}: expected {LDA_OUTPUTS} rewrites, parsed {}",
                            case.id,
                            list.sentences.len()
                        ));
                    }
                    for (i, text) in list.sentences.into_iter().take(LDA_OUTPUTS).enumerate() {
                        let stage = if i < 2 { Stage::LdaSynonym } else { Stage::LdaNegated };
                        sources.push((SentenceVariant::source(term, text, stage), CaseMeta::of(case)));
                    }
                }
                Err(e) => log.warn(format!("lda {}: skipped: {e}", case.id)),
            }
        }
        self.counterfactuals(sources, log).await
    }

    /// Syntactic augmentation over (identity term, topic) batches. When the
    /// reply has one sentence per input, outputs are linked to their inputs
    /// by position; otherwise to a synthetic group id.
    pub async fn run_syda(&self, cases: &[TestCase], log: &mut RunLog) -> Vec<TestCase> {
        let mut groups: Vec<((String, String), Vec<&TestCase>)> = Vec::new();
        for case in cases.iter().filter(|c| c.is_active()) {
            let key = (
                case.source().expect("source").identity_term.clone(),
                case.topic.clone().unwrap_or_default(),
            );
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(case),
                None => groups.push((key, vec![case])),
            }
        }
        let replies = join_all(groups.iter().map(|(_, members)| async move {
            let texts: Vec<String> = members.iter().map(|c| c.source().expect("source").text.clone()).collect();
            let prompt = self.prompts.syntactic(&texts)?;
            let reply = self.client.complete(&prompt, 0).await?;
            parse_sentence_list(&reply, Some(texts.len()))
        }))
        .await;
        let mut sources = Vec::new();
        for (((term, topic), members), reply) in groups.iter().zip(replies) {
            let list = match reply {
                Ok(list) => list,
                Err(e) => {
                    log.warn(format!("syda ({term}, {topic}): skipped: {e}"));
                    continue;
                }
            };
            let positional = !list.count_mismatch;
            if !positional {
                log.warn(format!(
                    "syda ({term}, {topic}): {} input(s), {} output(s); linked to the group",
                    members.len(),
                    list.sentences.len()
                ));
            }
            let shared_concept = members
                .iter()
                .all(|c| c.concept_term == members[0].concept_term)
                .then(|| members[0].concept_term.clone())
                .flatten();
            for (i, text) in list.sentences.into_iter().enumerate() {
                let meta = if positional {
                    CaseMeta::of(members[i])
                } else {
                    CaseMeta {
                        concept_term: shared_concept.clone(),
                        topic: (!topic.is_empty()).then(|| topic.clone()),
                        parent_id: Some(group_id(Stage::Syda, &self.config.spec.bias_type, &[term, topic])),
                    }
                };
                sources.push((SentenceVariant::source(term, text, Stage::Syda), meta));
            }
        }
        self.counterfactuals(sources, log).await
    }

    /// Semantic augmentation: one call per identity term with all of that
    /// term's active sentences; at most twenty outputs per group.
    pub async fn run_seda(&self, cases: &[TestCase], log: &mut RunLog) -> Vec<TestCase> {
        let spec = &self.config.spec;
        let groups: Vec<(&String, Vec<String>)> = spec
            .identity_terms
            .iter()
            .map(|term| {
                let texts = cases
                    .iter()
                    .filter(|c| c.is_active())
                    .filter_map(|c| c.source())
                    .filter(|s| &s.identity_term == term)
                    .map(|s| s.text.clone())
                    .collect();
                (term, texts)
            })
            .filter(|(_, texts): &(&String, Vec<String>)| !texts.is_empty())
            .collect();
        let replies = join_all(groups.iter().map(|(_, texts)| async move {
            let prompt = self.prompts.semantic(texts)?;
            let reply = self.client.complete(&prompt, 0).await?;
            parse_sentence_list(&reply, Some(SEDA_MAX_OUTPUTS))
        }))
        .await;
        let mut sources = Vec::new();
        for ((term, _), reply) in groups.iter().zip(replies) {
            let list = match reply {
                Ok(list) => list,
                Err(e) => {
                    log.warn(format!("seda {term}: skipped: {e}"));
                    continue;
                }
            };
            if list.count_mismatch {
                log.warn(format!(
                    "seda {term}: expected {SEDA_MAX_OUTPUTS} sentences, parsed {}",
                    list.sentences.len()
                ));
            }
            let parent = group_id(Stage::Seda, &spec.bias_type, &[term]);
            for text in list.sentences.into_iter().take(SEDA_MAX_OUTPUTS) {
                let meta = CaseMeta {
                    parent_id: Some(parent.clone()),
                    ..CaseMeta::default()
                };
                sources.push((SentenceVariant::source(term.as_str(), text, Stage::Seda), meta));
            }
        }
        self.counterfactuals(sources, log).await
    }

    /// The whole pipeline. Augmentation runs once, on active ETSG cases.
    pub async fn run(&self) -> std::result::Result<PipelineOutput, PipelineFailure> {
        let run_id = self.run_id();
        let mut log = RunLog::default();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut set = TestSet::new(run_id.clone(), format!("generated:{run_id}"), Vec::new());

        let fail = |error: PipelineError, set: TestSet, log: RunLog, counts: BTreeMap<String, usize>| {
            let metadata = RunMetadata::build(self, &run_id, &set, counts, log.warnings, Some(&error));
            PipelineFailure {
                error,
                partial: set,
                metadata,
            }
        };

        let triplets = match self.run_bts(&mut log).await {
            Ok(t) => t,
            Err(e) => return Err(fail(e, set, log, counts)),
        };
        counts.insert("bts_triplets".into(), triplets.len());

        let sentences = self.run_etsg(&triplets, &mut log).await;
        counts.insert("etsg_sentences".into(), sentences.len());
        if sentences.is_empty() {
            let e = PipelineError::Stage {
                stage: "etsg",
                message: "no triplet produced a sentence".into(),
            };
            return Err(fail(e, set, log, counts));
        }

        let sources = sentences
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
        set.cases = self.counterfactuals(sources, &mut log).await;
        filter_identical_counterfactuals(&mut set);
        let roots: Vec<TestCase> = set.active().cloned().collect();

        if self.config.enable_lda {
            let derived = self.run_lda(&roots, &mut log).await;
            set.cases.extend(derived);
        }
        if self.config.enable_syda {
            let derived = self.run_syda(&roots, &mut log).await;
            set.cases.extend(derived);
        }
        if self.config.enable_seda {
            let derived = self.run_seda(&roots, &mut log).await;
            set.cases.extend(derived);
        }
        filter_identical_counterfactuals(&mut set);
        let removed = dedupe(&mut set);
        if removed > 0 {
            log.warn(format!("{removed} duplicate case(s) removed"));
        }
        counts.insert("duplicates_removed".into(), removed);
        set.sort_by_id();

        let metadata = RunMetadata::build(self, &run_id, &set, counts, log.warnings, None);
        Ok(PipelineOutput { testset: set, metadata })
    }
}

/// Parent id for augmentation outputs that have no single source case.
pub fn group_id(stage: Stage, bias_type: &str, parts: &[&String]) -> String {
    let mut id = format!("group:{}:{bias_type}", stage.as_str().to_lowercase());
    for p in parts {
        id.push(':');
        id.push_str(p);
    }
    id
}
