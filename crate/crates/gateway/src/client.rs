//! Chat-completion client: live HTTP, record and playback modes.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use biascase_core::prompt::{ChatMessage, RenderedPrompt};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::cassette::{cassette_key, Cassette, CassetteRecord};
use crate::config::{ProviderConfig, ProviderMode};
use crate::error::{GatewayError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

/// Outcome of one request attempt.
#[derive(Debug)]
pub enum BackendError {
    /// Worth retrying: rate limits, server errors, timeouts, refused
    /// connections.
    Retryable(String),
    Fatal(String),
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn chat(&self, request: &ChatRequest) -> std::result::Result<String, BackendError>;
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

pub struct HttpBackend {
    client: reqwest::Client,
    url: String,
    api_key: String,
}

impl HttpBackend {
    pub fn new(config: &ProviderConfig) -> Result<Self> {
        let api_key = config.api_key()?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
        Ok(HttpBackend {
            client,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key,
        })
    }
}

#[async_trait]
impl ChatBackend for HttpBackend {
    async fn chat(&self, request: &ChatRequest) -> std::result::Result<String, BackendError> {
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(request)
            .send()
            .await
            .map_err(|e| BackendError::Retryable(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(BackendError::Fatal(format!("HTTP {status}: {body}")));
        }
        let body: CompletionResponse = resp
            .json()
            .await
            .map_err(|e| BackendError::Fatal(format!("unreadable completion: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Fatal("completion has no choices[0].message.content".into()))
    }
}

#[derive(Debug, Default)]
pub struct CallStats {
    pub calls: AtomicU64,
    pub attempts: AtomicU64,
    pub cassette_hits: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub calls: u64,
    pub attempts: u64,
    pub cassette_hits: u64,
}

pub struct LlmClient {
    config: ProviderConfig,
    backend: Option<Arc<dyn ChatBackend>>,
    cassette: Option<Arc<Cassette>>,
    permits: Arc<Semaphore>,
    stats: Arc<CallStats>,
}

impl LlmClient {
    /// Builds a client for the configured mode. Playback never constructs
    /// an HTTP backend and does not read the API key.
    pub fn from_config(config: ProviderConfig) -> Result<Self> {
        config.validate()?;
        let (backend, cassette): (Option<Arc<dyn ChatBackend>>, _) = match config.mode {
            ProviderMode::Playback => {
                let path = config.cassette.as_ref().expect("validated");
                (None, Some(Arc::new(Cassette::open(path)?)))
            }
            ProviderMode::Record => {
                let path = config.cassette.as_ref().expect("validated");
                (
                    Some(Arc::new(HttpBackend::new(&config)?)),
                    Some(Arc::new(Cassette::open_for_record(path)?)),
                )
            }
            ProviderMode::Live => (Some(Arc::new(HttpBackend::new(&config)?)), None),
        };
        Ok(Self::assemble(config, backend, cassette))
    }

    /// Client over an arbitrary backend, e.g. a scripted one in tests or a
    /// recording helper. In playback mode the backend is ignored.
    pub fn with_backend(config: ProviderConfig, backend: Arc<dyn ChatBackend>) -> Result<Self> {
        config.validate()?;
        let cassette = match (config.mode, config.cassette.as_ref()) {
            (ProviderMode::Playback, Some(p)) => Some(Arc::new(Cassette::open(p)?)),
            (ProviderMode::Record, Some(p)) => Some(Arc::new(Cassette::open_for_record(p)?)),
            _ => None,
        };
        let backend = (config.mode != ProviderMode::Playback).then_some(backend);
        Ok(Self::assemble(config, backend, cassette))
    }

    fn assemble(
        config: ProviderConfig,
        backend: Option<Arc<dyn ChatBackend>>,
        cassette: Option<Arc<Cassette>>,
    ) -> Self {
        LlmClient {
            permits: Arc::new(Semaphore::new(config.parallelism)),
            config,
            backend,
            cassette,
            stats: Arc::new(CallStats::default()),
        }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            calls: self.stats.calls.load(Ordering::SeqCst),
            attempts: self.stats.attempts.load(Ordering::SeqCst),
            cassette_hits: self.stats.cassette_hits.load(Ordering::SeqCst),
        }
    }

    pub fn key(&self, prompt: &RenderedPrompt) -> String {
        cassette_key(&prompt.messages, &self.config.model_name, self.config.temperature)
    }

    /// Returns the assistant text for `prompt`. `sample` tells apart repeated
    /// requests of the same prompt so that each repeat is recorded and
    /// replayed separately.
    pub async fn complete(&self, prompt: &RenderedPrompt, sample: u32) -> Result<String> {
        self.stats.calls.fetch_add(1, Ordering::SeqCst);
        let key = self.key(prompt);
        if self.config.mode == ProviderMode::Playback {
            let cassette = self.cassette.as_ref().expect("playback has a cassette");
            return match cassette.get(&key, sample) {
                Some(reply) => {
                    self.stats.cassette_hits.fetch_add(1, Ordering::SeqCst);
                    Ok(reply)
                }
                None => Err(GatewayError::FixtureMiss(format!(
                    "{key} sample {sample} ({})",
                    prompt.prompt_kind
                ))),
            };
        }
        let backend = self
            .backend
            .as_ref()
            .ok_or_else(|| GatewayError::Config("no backend configured".into()))?;
        let request = ChatRequest {
            model: self.config.model_name.clone(),
            messages: prompt.messages.clone(),
            temperature: self.config.temperature,
        };
        let reply = {
            let _permit = self.permits.acquire().await.expect("semaphore open");
            self.send_with_retries(backend.as_ref(), &request).await?
        };
        if let (ProviderMode::Record, Some(cassette)) = (self.config.mode, &self.cassette) {
            cassette.append(CassetteRecord {
                prompt_hash: key,
                sample,
                prompt_kind: prompt.prompt_kind,
                model_name: self.config.model_name.clone(),
                temperature: self.config.temperature,
                input: prompt.last_user().to_string(),
                reply: reply.clone(),
            })?;
        }
        Ok(reply)
    }

    async fn send_with_retries(&self, backend: &dyn ChatBackend, request: &ChatRequest) -> Result<String> {
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            self.stats.attempts.fetch_add(1, Ordering::SeqCst);
            match backend.chat(request).await {
                Ok(reply) => return Ok(reply),
                Err(BackendError::Fatal(message)) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err(BackendError::Retryable(message)) => {
                    if attempt > self.config.max_retries {
                        return Err(GatewayError::Transport {
                            attempts: attempt,
                            message,
                        });
                    }
                    let delay = self.config.retry_backoff_ms.saturating_mul(1 << (attempt - 1).min(10));
                    log::warn!("attempt {attempt} failed ({message}); retrying in {delay} ms");
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                }
            }
        }
    }
}
