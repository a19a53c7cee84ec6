#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use biascase_core::{BiasSpec, PromptKind, PromptLibrary, Role};
use biascase_gateway::{BackendError, ChatBackend, ChatRequest, LlmClient, ProviderConfig};
use biascase_pipeline::{FixtureScript, Pipeline, RunConfig};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn kind_of(req: &ChatRequest) -> PromptKind {
    let system = &req.messages.iter().find(|m| m.role == Role::System).unwrap().content;
    if system.starts_with("You are working on bias") {
        PromptKind::Bdp
    } else if system.starts_with("Generate a short") {
        PromptKind::Sgp
    } else if system.contains("by replacing all contextual references") {
        PromptKind::Cfsp
    } else if system.starts_with("Generate 4 sentences") {
        PromptKind::Ldp
    } else if system.contains("Rephrase and extend") {
        PromptKind::Sydp
    } else {
        PromptKind::Sedp
    }
}

/// `(term, other)` from a counterfactual request.
pub fn cf_terms(req: &ChatRequest) -> (String, String) {
    let system = &req.messages[0].content;
    let rest = system.split("references to ").nth(1).unwrap();
    let (term, rest) = rest.split_once(" by ").unwrap();
    let other = rest.split(" counterpart").next().unwrap();
    (term.to_string(), other.to_string())
}

pub fn user(req: &ChatRequest) -> &str {
    &req.messages.last().unwrap().content
}

pub fn input_sentences(req: &ChatRequest) -> Vec<String> {
    serde_json::from_str(user(req)).unwrap()
}

type Reply = dyn Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync;

/// Backend answering with a closure, optionally after a per-call delay.
pub struct Scripted {
    reply: Box<Reply>,
    jitter: bool,
    pub calls: AtomicUsize,
}

impl Scripted {
    pub fn new(f: impl Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync + 'static) -> Self {
        Scripted {
            reply: Box::new(f),
            jitter: false,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_jitter(mut self) -> Self {
        self.jitter = true;
        self
    }
}

#[async_trait]
impl ChatBackend for Scripted {
    async fn chat(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if self.jitter {
            // later calls tend to finish first
            let ms = (97 * (n + 3)) % 13;
            tokio::time::sleep(Duration::from_millis(ms as u64)).await;
        }
        (self.reply)(request)
    }
}

/// A toy generator that follows every prompt's output format.
pub fn echo_generator(req: &ChatRequest) -> Result<String, BackendError> {
    let u = user(req).to_string();
    Ok(match kind_of(req) {
        PromptKind::Bdp => {
            let (n, rest) = u.split_once(' ').unwrap();
            let terms = rest.rsplit_once('[').unwrap().1.trim_end_matches(']');
            let n: usize = n.parse().unwrap();
            (1..=n)
                .map(|k| {
                    let body: Vec<String> = terms.split(',').map(|t| format!("{t}: 'c{k}{t}'")).collect();
                    format!("{k}. Topic {k}: {{{}}}", body.join(", "))
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        PromptKind::Sgp => {
            let mut parts = u.split(" [");
            let n: usize = parts.next().unwrap().parse().unwrap();
            let term = parts.next().unwrap().trim_end_matches(']');
            let concept = parts.next().unwrap().trim_end_matches(']');
            (1..=n)
                .map(|i| format!("{i}. The {term} person is a {concept} number {i}."))
                .collect::<Vec<_>>()
                .join("\n")
        }
        PromptKind::Cfsp => {
            let (term, other) = cf_terms(req);
            let out: Vec<String> = input_sentences(req)
                .iter()
                .map(|s| s.replace(&format!(" {term} "), &format!(" {other} ")))
                .collect();
            serde_json::to_string(&out).unwrap()
        }
        PromptKind::Ldp => ["Surely", "Truly", "Never", "Not"]
            .iter()
            .map(|w| format!("{w}, {u}"))
            .collect::<Vec<_>>()
            .join("\n"),
        PromptKind::Sydp => {
            let out: Vec<String> = input_sentences(req).iter().map(|s| format!("Indeed, {s}")).collect();
            serde_json::to_string(&out).unwrap()
        }
        PromptKind::Sedp => {
            let first = input_sentences(req).remove(0);
            (1..=3).map(|i| format!("{i}. Elsewhere {i}, {first}")).collect::<Vec<_>>().join("\n")
        }
    })
}

pub fn live_client(backend: Scripted, parallelism: usize) -> Arc<LlmClient> {
    let cfg = ProviderConfig {
        parallelism,
        retry_backoff_ms: 1,
        max_retries: 1,
        ..Default::default()
    };
    Arc::new(LlmClient::with_backend(cfg, Arc::new(backend)).unwrap())
}

pub fn pipeline(spec: BiasSpec, backend: Scripted) -> Pipeline {
    let config = RunConfig::new(spec, ProviderConfig::default());
    Pipeline::with_client(config, PromptLibrary::builtin(), live_client(backend, 4))
}

/// Writes the cassette for a shipped script into `dir`.
pub fn cassette_from_script(name: &str, dir: &Path) -> PathBuf {
    let script = FixtureScript::load(&repo_root().join(format!("fixtures/cassettes/{name}.script.json"))).unwrap();
    let out = dir.join(format!("{name}.jsonl"));
    let defaults = ProviderConfig::default();
    script
        .write_cassette(&PromptLibrary::builtin(), &defaults.model_name, defaults.temperature, &out)
        .unwrap();
    out
}

pub fn playback_pipeline(spec: BiasSpec, cassette: &Path) -> Pipeline {
    let config = RunConfig::new(spec, ProviderConfig::playback(cassette));
    Pipeline::new(config).unwrap()
}
