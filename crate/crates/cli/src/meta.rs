//! The metadata file every invocation leaves behind. It carries no clock
//! readings, so reruns on the same inputs write the same bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEcho {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommandMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: BTreeMap<String, InputEcho>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub settings: serde_json::Value,
    pub counts: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub completed: bool,
    pub error: Option<ErrorEcho>,
    /// Set when the command wrote a richer metadata file of its own.
    #[serde(skip)]
    pub written_by_command: bool,
}

impl CommandMeta {
    pub fn new(command: &str) -> Self {
        CommandMeta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            settings: serde_json::Value::Null,
            counts: BTreeMap::new(),
            warnings: Vec::new(),
            completed: false,
            error: None,
            written_by_command: false,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::run("io", format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(
            role.into(),
            InputEcho {
                path: path.to_path_buf(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            },
        );
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) {
        self.outputs.insert(role.into(), path.to_path_buf());
    }

    pub fn count(&mut self, key: &str, n: impl TryInto<u64>) {
        self.counts.insert(key.into(), n.try_into().unwrap_or(u64::MAX));
    }

    pub fn settings(&mut self, value: impl Serialize) {
        self.settings = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
    }

    pub fn finish(&mut self, error: Option<&CliError>) {
        self.completed = error.is_none();
        self.error = error.map(|e| ErrorEcho {
            kind: e.kind().into(),
            message: e.to_string(),
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        std::fs::write(path, body)
            .map_err(|e| CliError::run("io", format!("cannot write {}: {e}", path.display())))
    }
}

/// `out.jsonl` → `out.meta.json`, matching the generation pipeline.
pub fn beside(path: &Path) -> PathBuf {
    biascase_pipeline::metadata_path(path)
}
