//! Append-only store of recorded LLM replies.
//!
//! One JSON object per line. A reply is addressed by the hash of the prompt
//! messages, model name and temperature, plus a sample index that
//! distinguishes repeated requests of the same prompt.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use biascase_core::prompt::{ChatMessage, PromptKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GatewayError, Result};

pub fn cassette_key(messages: &[ChatMessage], model_name: &str, temperature: f64) -> String {
    #[derive(Serialize)]
    struct KeyMaterial<'a> {
        messages: &'a [ChatMessage],
        model: &'a str,
        temperature: f64,
    }
    let material = serde_json::to_vec(&KeyMaterial {
        messages,
        model: model_name,
        temperature,
    })
    .expect("key material serializes");
    hex::encode(Sha256::digest(&material))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteRecord {
    pub prompt_hash: String,
    #[serde(default)]
    pub sample: u32,
    pub prompt_kind: PromptKind,
    pub model_name: String,
    pub temperature: f64,
    /// Final user message, kept for readability only.
    #[serde(default)]
    pub input: String,
    pub reply: String,
}

#[derive(Debug)]
pub struct Cassette {
    path: PathBuf,
    replies: Mutex<HashMap<(String, u32), String>>,
    writer: Option<Mutex<File>>,
}

impl Cassette {
    /// Read-only cassette for playback.
    pub fn open(path: &Path) -> Result<Self> {
        let replies = Self::read_records(path)?
            .into_iter()
            .map(|r| ((r.prompt_hash, r.sample), r.reply))
            .collect();
        Ok(Cassette {
            path: path.to_path_buf(),
            replies: Mutex::new(replies),
            writer: None,
        })
    }

    /// Cassette that appends new records. Existing records are kept.
    pub fn open_for_record(path: &Path) -> Result<Self> {
        let replies = if path.exists() {
            Self::read_records(path)?
                .into_iter()
                .map(|r| ((r.prompt_hash, r.sample), r.reply))
                .collect()
        } else {
            HashMap::new()
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Cassette {
            path: path.to_path_buf(),
            replies: Mutex::new(replies),
            writer: Some(Mutex::new(file)),
        })
    }

    pub fn read_records(path: &Path) -> Result<Vec<CassetteRecord>> {
        let f = File::open(path).map_err(|e| {
            GatewayError::Config(format!("cannot open cassette {}: {e}", path.display()))
        })?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CassetteRecord =
                serde_json::from_str(&line).map_err(|e| GatewayError::Cassette {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            out.push(rec);
        }
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.replies.lock().expect("cassette lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, prompt_hash: &str, sample: u32) -> Option<String> {
        self.replies
            .lock()
            .expect("cassette lock")
            .get(&(prompt_hash.to_string(), sample))
            .cloned()
    }

    /// Appends a record. Writes are serialized; each record is one line.
    pub fn append(&self, record: CassetteRecord) -> Result<()> {
        let writer = self
            .writer
            .as_ref()
            .ok_or_else(|| GatewayError::Config("cassette opened read-only".into()))?;
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        {
            let mut f = writer.lock().expect("cassette writer lock");
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        self.replies
            .lock()
            .expect("cassette lock")
            .insert((record.prompt_hash, record.sample), record.reply);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use biascase_core::prompt::Role;

    fn msg(s: &str) -> Vec<ChatMessage> {
        vec![ChatMessage {
            role: Role::User,
            content: s.into(),
        }]
    }

    #[test]
    fn key_depends_on_every_part() {
        let base = cassette_key(&msg("a"), "m", 1.0);
        assert_eq!(base, cassette_key(&msg("a"), "m", 1.0));
        assert_ne!(base, cassette_key(&msg("b"), "m", 1.0));
        assert_ne!(base, cassette_key(&msg("a"), "n", 1.0));
        assert_ne!(base, cassette_key(&msg("a"), "m", 0.0));
    }

    #[test]
    fn record_then_playback() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let c = Cassette::open_for_record(&p).unwrap();
        for (sample, reply) in [(0, "first"), (1, "second")] {
            c.append(CassetteRecord {
                prompt_hash: "h".into(),
                sample,
                prompt_kind: PromptKind::Bdp,
                model_name: "m".into(),
                temperature: 1.0,
                input: "x".into(),
                reply: reply.into(),
            })
            .unwrap();
        }
        let back = Cassette::open(&p).unwrap();
        assert_eq!(back.get("h", 0).as_deref(), Some("first"));
        assert_eq!(back.get("h", 1).as_deref(), Some("second"));
        assert_eq!(back.get("h", 2), None);
        assert!(back.append(Cassette::read_records(&p).unwrap()[0].clone()).is_err());
    }

    #[test]
    fn bad_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        std::fs::write(&p, "\n{oops\n").unwrap();
        match Cassette::open(&p).unwrap_err() {
            GatewayError::Cassette { line, .. } => assert_eq!(line, 2),
            e => panic!("{e:?}"),
        }
    }
}
