//! Layered configuration: command-line flags over the TOML config file over
//! `BIASCASE_*` environment variables over built-in defaults. API keys are
//! only ever read from the environment variable named by `api_key_env`.

use std::path::{Path, PathBuf};

use biascase_core::{BiasSpec, PromptLibrary};
use biascase_gateway::ProviderConfig;
use biascase_pipeline::RunConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CONFIG_ENV: &str = "BIASCASE_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderLayer {
    /// `live`, `record:<cassette>` or `playback:<cassette>`.
    pub source: Option<String>,
    pub base_url: Option<String>,
    pub model_name: Option<String>,
    pub api_key_env: Option<String>,
    pub temperature: Option<f64>,
    pub max_retries: Option<u32>,
    pub request_timeout: Option<u64>,
    pub retry_backoff_ms: Option<u64>,
    pub parallelism: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationLayer {
    pub bias_type: Option<String>,
    pub identity_terms: Option<Vec<String>>,
    pub topics_per_bts_call: Option<usize>,
    pub bts_repeats: Option<usize>,
    pub sentences_per_concept: Option<usize>,
    pub lda: Option<bool>,
    pub syda: Option<bool>,
    pub seda: Option<bool>,
    pub run_id: Option<String>,
    pub prompts_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub provider: ProviderLayer,
    #[serde(default)]
    pub generation: GenerationLayer,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {{
        let (hi, lo) = ($hi, $lo);
        Self { $($f: hi.$f.or(lo.$f)),* }
    }};
}

impl ProviderLayer {
    pub fn over(self, lower: Self) -> Self {
        overlay!(self, lower, source, base_url, model_name, api_key_env, temperature, max_retries,
            request_timeout, retry_backoff_ms, parallelism)
    }

    pub fn from_env() -> Result<Self> {
        Ok(ProviderLayer {
            source: env("BIASCASE_PROVIDER"),
            base_url: env("BIASCASE_BASE_URL"),
            model_name: env("BIASCASE_MODEL"),
            api_key_env: env("BIASCASE_API_KEY_ENV"),
            temperature: env_parsed("BIASCASE_TEMPERATURE")?,
            max_retries: env_parsed("BIASCASE_MAX_RETRIES")?,
            request_timeout: env_parsed("BIASCASE_REQUEST_TIMEOUT")?,
            retry_backoff_ms: None,
            parallelism: env_parsed("BIASCASE_PARALLELISM")?,
        })
    }

    pub fn resolve(self) -> Result<ProviderConfig> {
        let mut cfg = ProviderConfig::default();
        if let Some(s) = &self.source {
            cfg.apply_provider_flag(s)?;
        }
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { cfg.$f = v; } )*};
        }
        set!(base_url, model_name, api_key_env, temperature, max_retries, request_timeout,
            retry_backoff_ms, parallelism);
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        if let Some(s) = &self.source {
            if let Some((mode, p)) = s.split_once(':') {
                if Path::new(p).is_relative() && !p.is_empty() {
                    self.source = Some(format!("{mode}:{}", base.join(p).display()));
                }
            }
        }
    }
}

impl GenerationLayer {
    pub fn over(self, lower: Self) -> Self {
        overlay!(self, lower, bias_type, identity_terms, topics_per_bts_call, bts_repeats,
            sentences_per_concept, lda, syda, seda, run_id, prompts_dir)
    }

    /// The spec from this layer, or `fallback` (e.g. read from a stage
    /// input file) when the layer names none.
    pub fn spec(&self, fallback: Option<&BiasSpec>) -> Result<BiasSpec> {
        match (&self.bias_type, &self.identity_terms, fallback) {
            (Some(b), Some(t), _) => Ok(BiasSpec::new(b.clone(), t.clone())?),
            (None, None, Some(f)) => Ok(f.clone()),
            (Some(b), None, Some(f)) if *b == f.bias_type => Ok(f.clone()),
            (None, Some(t), Some(f)) => Ok(BiasSpec::new(f.bias_type.clone(), t.clone())?),
            _ => Err(CliError::usage(
                "a bias spec is needed: pass --bias and --terms or set them in the config file",
            )),
        }
    }

    pub fn run_config(&self, spec: BiasSpec, provider: ProviderConfig) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(spec, provider);
        if let Some(v) = self.topics_per_bts_call {
            cfg.topics_per_bts_call = v;
        }
        if let Some(v) = self.bts_repeats {
            cfg.bts_repeats = v;
        }
        if let Some(v) = self.sentences_per_concept {
            cfg.sentences_per_concept = v;
        }
        cfg.enable_lda = self.lda.unwrap_or(true);
        cfg.enable_syda = self.syda.unwrap_or(true);
        cfg.enable_seda = self.seda.unwrap_or(true);
        cfg.run_id = self.run_id.clone();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn prompts(&self) -> Result<PromptLibrary> {
        match &self.prompts_dir {
            Some(dir) if !dir.is_dir() => Err(CliError::usage(format!(
                "prompts directory {} does not exist",
                dir.display()
            ))),
            Some(dir) => Ok(PromptLibrary::from_dir(dir)?),
            None => Ok(PromptLibrary::builtin()),
        }
    }
}

impl ConfigFile {
    /// Reads the file named by `--config`, else by `BIASCASE_CONFIG`, else
    /// nothing. Relative paths inside it are taken from its directory.
    pub fn locate(flag: Option<&Path>) -> Result<Self> {
        let path = match flag {
            Some(p) => Some(p.to_path_buf()),
            None => env(CONFIG_ENV).map(PathBuf::from),
        };
        match path {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut file: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.provider.rebase(base);
        if let Some(d) = &file.generation.prompts_dir {
            if d.is_relative() {
                file.generation.prompts_dir = Some(base.join(d));
            }
        }
        Ok(file)
    }
}

fn env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

fn env_parsed<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
    match env(name) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(format!("{name}=`{v}` is not a valid value"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use biascase_gateway::ProviderMode;

    #[test]
    fn flags_beat_file_beat_env() {
        let flags = ProviderLayer {
            temperature: Some(0.5),
            ..Default::default()
        };
        let file = ProviderLayer {
            temperature: Some(0.7),
            model_name: Some("file-model".into()),
            ..Default::default()
        };
        let env = ProviderLayer {
            model_name: Some("env-model".into()),
            parallelism: Some(9),
            source: Some("playback:c.jsonl".into()),
            ..Default::default()
        };
        let cfg = flags.over(file).over(env).resolve().unwrap();
        assert_eq!(cfg.temperature, 0.5);
        assert_eq!(cfg.model_name, "file-model");
        assert_eq!(cfg.parallelism, 9);
        assert_eq!(cfg.mode, ProviderMode::Playback);
    }

    #[test]
    fn config_file_paths_are_relative_to_it() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "[provider]\nsource = \"playback:c.jsonl\"\n[generation]\nbias_type = \"age\"\nidentity_terms = [\"young\", \"old\"]\n",
        )
        .unwrap();
        let file = ConfigFile::load(&path).unwrap();
        let expected = format!("playback:{}", dir.path().join("c.jsonl").display());
        assert_eq!(file.provider.source.as_deref(), Some(expected.as_str()));
        let spec = file.generation.spec(None).unwrap();
        assert_eq!(spec.identity_terms, ["young", "old"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[provider]\napi_key = \"sk-...\"\n").unwrap();
        assert!(matches!(ConfigFile::load(&path), Err(CliError::Usage(_))));
    }

    #[test]
    fn spec_falls_back_to_input_file() {
        let from_file = BiasSpec::new("gender", ["he", "she"]).unwrap();
        let layer = GenerationLayer::default();
        assert_eq!(layer.spec(Some(&from_file)).unwrap(), from_file);
        assert!(layer.spec(None).is_err());
        let other = GenerationLayer {
            bias_type: Some("race".into()),
            ..Default::default()
        };
        assert!(other.spec(Some(&from_file)).is_err());
    }
}
