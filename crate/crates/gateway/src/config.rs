use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    #[default]
    Live,
    Record,
    Playback,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_retries() -> u32 {
    4
}

fn default_timeout() -> u64 {
    60
}

fn default_backoff() -> u64 {
    500
}

fn default_parallelism() -> usize {
    4
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_base_url() -> String {
    "https://api.openai.com/v1".into()
}

fn default_model() -> String {
    "gpt-3.5-turbo".into()
}

/// Generator LLM settings. The API key itself never appears here; only the
/// name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    #[serde(default = "default_base_url")]
    pub base_url: String,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: u64,
    /// First retry delay in milliseconds; doubles on each further retry.
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub mode: ProviderMode,
    #[serde(default)]
    pub cassette: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            base_url: default_base_url(),
            model_name: default_model(),
            api_key_env: default_key_env(),
            temperature: default_temperature(),
            max_retries: default_retries(),
            request_timeout: default_timeout(),
            retry_backoff_ms: default_backoff(),
            parallelism: default_parallelism(),
            mode: ProviderMode::Live,
            cassette: None,
        }
    }
}

impl ProviderConfig {
    pub fn playback(cassette: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            mode: ProviderMode::Playback,
            cassette: Some(cassette.into()),
            ..Default::default()
        }
    }

    /// Parses `live`, `record:<path>` or `playback:<path>`.
    pub fn apply_provider_flag(&mut self, flag: &str) -> Result<()> {
        let (mode, path) = match flag.split_once(':') {
            Some(("record", p)) => (ProviderMode::Record, Some(p)),
            Some(("playback", p)) => (ProviderMode::Playback, Some(p)),
            None if flag == "live" => (ProviderMode::Live, None),
            _ => {
                return Err(GatewayError::Config(format!(
                    "provider must be live, record:<path> or playback:<path>, got `{flag}`"
                )))
            }
        };
        if let Some(p) = path {
            if p.is_empty() {
                return Err(GatewayError::Config("empty cassette path".into()));
            }
            self.cassette = Some(PathBuf::from(p));
        }
        self.mode = mode;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.parallelism == 0 {
            return Err(GatewayError::Config("parallelism must be at least 1".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(GatewayError::Config("model_name is empty".into()));
        }
        match self.mode {
            ProviderMode::Playback | ProviderMode::Record if self.cassette.is_none() => Err(
                GatewayError::Config(format!("{:?} mode needs a cassette path", self.mode)),
            ),
            ProviderMode::Live | ProviderMode::Record
                if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) =>
            {
                Err(GatewayError::Config(format!(
                    "base_url must be an http(s) URL, got `{}`",
                    self.base_url
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.request_timeout.max(1))
    }

    /// Reads the API key from the configured environment variable.
    pub fn api_key(&self) -> Result<String> {
        match std::env::var(&self.api_key_env) {
            Ok(k) if !k.trim().is_empty() => Ok(k),
            _ => Err(GatewayError::Config(format!(
                "environment variable {} is not set",
                self.api_key_env
            ))),
        }
    }
}
