//! Sentiment scorers under test: a remote HTTP contract and fixture tables.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use biascase_core::{normalize_text, SentimentOutput};
use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Http,
    Fixture,
}

fn default_batch() -> usize {
    32
}

fn default_retries() -> u32 {
    3
}

fn default_timeout() -> u64 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub model_id: String,
    /// URL for HTTP scorers, table path for fixtures.
    pub endpoint: String,
    pub kind: ScorerKind,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub request_timeout: u64,
    /// Optional environment variable holding a bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
}

impl ScorerConfig {
    pub fn fixture(model_id: impl Into<String>, table: impl Into<String>) -> Self {
        ScorerConfig {
            model_id: model_id.into(),
            endpoint: table.into(),
            kind: ScorerKind::Fixture,
            batch_size: default_batch(),
            max_retries: default_retries(),
            request_timeout: default_timeout(),
            api_key_env: None,
        }
    }

    pub fn http(model_id: impl Into<String>, url: impl Into<String>) -> Self {
        ScorerConfig {
            kind: ScorerKind::Http,
            ..Self::fixture(model_id, url)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(GatewayError::Config(format!(
                "scorer {}: batch_size must be at least 1",
                self.model_id
            )));
        }
        if self.model_id.trim().is_empty() {
            return Err(GatewayError::Config("scorer model_id is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScorerFile {
    #[serde(default, rename = "scorer")]
    pub scorers: Vec<ScorerConfig>,
}

impl ScorerFile {
    /// Reads a TOML file of `[[scorer]]` tables. Relative fixture paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut file: ScorerFile = toml::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut file.scorers {
            s.validate()?;
            if s.kind == ScorerKind::Fixture && Path::new(&s.endpoint).is_relative() {
                s.endpoint = base.join(&s.endpoint).to_string_lossy().into_owned();
            }
        }
        Ok(file)
    }
}

/// Fixture table: tab-separated `normalized text, label, score` rows.
#[derive(Debug, Clone, Default)]
pub struct FixtureTable {
    entries: HashMap<String, SentimentOutput>,
}

impl FixtureTable {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GatewayError::Config(format!("cannot read fixture table {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [t, label, score] = cols[..] else {
                return Err(GatewayError::Protocol(format!(
                    "fixture line {}: expected 3 tab-separated fields",
                    i + 1
                )));
            };
            let score: f64 = score.trim().parse().map_err(|_| {
                GatewayError::Protocol(format!("fixture line {}: bad score `{score}`", i + 1))
            })?;
            entries.insert(normalize_text(t), SentimentOutput::new(label.trim(), score)?);
        }
        Ok(FixtureTable { entries })
    }

    pub fn insert(&mut self, text: &str, output: SentimentOutput) {
        self.entries.insert(normalize_text(text), output);
    }

    pub fn lookup(&self, text: &str) -> Result<SentimentOutput> {
        self.entries
            .get(&normalize_text(text))
            .cloned()
            .ok_or_else(|| GatewayError::FixtureMiss(text.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serializes rows sorted by text.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        rows.iter()
            .map(|(t, o)| format!("{t}\t{}\t{}\n", o.label, o.score))
            .collect()
    }
}

#[derive(Deserialize)]
struct LabelScore {
    label: String,
    score: f64,
}

enum Backend {
    Fixture(FixtureTable),
    Http {
        client: reqwest::Client,
        api_key: Option<String>,
    },
}

pub struct Scorer {
    config: ScorerConfig,
    backend: Backend,
}

impl Scorer {
    pub fn new(config: ScorerConfig) -> Result<Self> {
        config.validate()?;
        let backend = match config.kind {
            ScorerKind::Fixture => Backend::Fixture(FixtureTable::load(&PathBuf::from(&config.endpoint))?),
            ScorerKind::Http => {
                let api_key = match &config.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        GatewayError::Config(format!("environment variable {var} is not set"))
                    })?),
                    None => None,
                };
                let client = reqwest::Client::builder()
                    .timeout(Duration::from_secs(config.request_timeout.max(1)))
                    .build()
                    .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
                Backend::Http { client, api_key }
            }
        };
        Ok(Scorer { config, backend })
    }

    pub fn from_table(model_id: impl Into<String>, table: FixtureTable) -> Self {
        Scorer {
            config: ScorerConfig::fixture(model_id, "<memory>"),
            backend: Backend::Fixture(table),
        }
    }

    pub fn model_id(&self) -> &str {
        &self.config.model_id
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    /// One output per text, in input order. Batches run sequentially.
    pub async fn score_batch(&self, texts: &[String]) -> Result<Vec<SentimentOutput>> {
        if texts.is_empty() {
            return Err(GatewayError::Config("nothing to score".into()));
        }
        match &self.backend {
            Backend::Fixture(table) => texts.iter().map(|t| table.lookup(t)).collect(),
            Backend::Http { client, api_key } => {
                let mut out = Vec::with_capacity(texts.len());
                for chunk in texts.chunks(self.config.batch_size) {
                    out.extend(self.post_chunk(client, api_key.as_deref(), chunk).await?);
                }
                Ok(out)
            }
        }
    }

    async fn post_chunk(
        &self,
        client: &reqwest::Client,
        api_key: Option<&str>,
        chunk: &[String],
    ) -> Result<Vec<SentimentOutput>> {
        let body = serde_json::json!({ "texts": chunk });
        let mut attempt = 0;
        let reply: Vec<Vec<LabelScore>> = loop {
            attempt += 1;
            let mut req = client.post(&self.config.endpoint).json(&body);
            if let Some(k) = api_key {
                req = req.bearer_auth(k);
            }
            let failure = match req.send().await {
                Ok(resp) if resp.status().is_success() => {
                    break resp.json().await.map_err(|e| {
                        GatewayError::Protocol(format!("{}: unreadable reply: {e}", self.config.model_id))
                    })?;
                }
                Ok(resp) if resp.status().as_u16() == 429 || resp.status().is_server_error() => {
                    format!("HTTP {}", resp.status())
                }
                Ok(resp) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt,
                        message: format!("HTTP {}", resp.status()),
                    })
                }
                Err(e) => e.to_string(),
            };
            if attempt > self.config.max_retries {
                return Err(GatewayError::Transport {
                    attempts: attempt,
                    message: failure,
                });
            }
            tokio::time::sleep(Duration::from_millis(200 << (attempt - 1).min(6))).await;
        };
        if reply.len() != chunk.len() {
            return Err(GatewayError::Protocol(format!(
                "{}: sent {} texts, got {} results",
                self.config.model_id,
                chunk.len(),
                reply.len()
            )));
        }
        reply
            .into_iter()
            .map(|candidates| {
                let top = candidates
                    .into_iter()
                    .max_by(|a, b| a.score.total_cmp(&b.score))
                    .ok_or_else(|| GatewayError::Protocol("empty label list".into()))?;
                Ok(SentimentOutput::new(top.label, top.score)?)
            })
            .collect()
    }
}
