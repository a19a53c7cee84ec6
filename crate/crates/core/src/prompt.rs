//! Rendering of the six generation prompts into role-tagged chat messages.
//!
//! Templates live in `prompts/*.prompt` and are embedded at build time. A
//! template is a sequence of sections, each opened by a line `@system`,
//! `@user` or `@assistant`; the section body runs until the next header.
//! Placeholders use `{name}` and are substituted in a single pass, so
//! substituted values are never re-scanned. Braces that do not form a known
//! placeholder (the JSON-ish few-shot replies) are copied through as-is.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::BiasSpec;
use crate::error::{Error, Result};

const PLACEHOLDERS: &[&str] = &[
    "N",
    "bias_type",
    "identity_terms",
    "identity_term",
    "concept_term",
    "term",
    "other",
    "sentence",
    "sentences",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PromptKind {
    /// Bias definition: topic / identity / concept triplets.
    Bdp,
    /// Example sentence generation.
    Sgp,
    /// Counterfactual rewrite.
    Cfsp,
    /// Lexical diversity.
    Ldp,
    /// Syntactic diversity.
    Sydp,
    /// Semantic diversity.
    Sedp,
}

impl PromptKind {
    pub const ALL: [PromptKind; 6] = [
        PromptKind::Bdp,
        PromptKind::Sgp,
        PromptKind::Cfsp,
        PromptKind::Ldp,
        PromptKind::Sydp,
        PromptKind::Sedp,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PromptKind::Bdp => "bias_definition.prompt",
            PromptKind::Sgp => "sentence_generation.prompt",
            PromptKind::Cfsp => "counterfactual.prompt",
            PromptKind::Ldp => "lexical.prompt",
            PromptKind::Sydp => "syntactic.prompt",
            PromptKind::Sedp => "semantic.prompt",
        }
    }

    fn builtin_source(self) -> &'static str {
        match self {
            PromptKind::Bdp => include_str!("../prompts/bias_definition.prompt"),
            PromptKind::Sgp => include_str!("../prompts/sentence_generation.prompt"),
            PromptKind::Cfsp => include_str!("../prompts/counterfactual.prompt"),
            PromptKind::Ldp => include_str!("../prompts/lexical.prompt"),
            PromptKind::Sydp => include_str!("../prompts/syntactic.prompt"),
            PromptKind::Sedp => include_str!("../prompts/semantic.prompt"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Bdp => "BDP",
            PromptKind::Sgp => "SGP",
            PromptKind::Cfsp => "CFSP",
            PromptKind::Ldp => "LDP",
            PromptKind::Sydp => "SYDP",
            PromptKind::Sedp => "SEDP",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub prompt_kind: PromptKind,
    pub messages: Vec<ChatMessage>,
    /// sha256 of the template file the messages came from.
    pub prompt_hash: String,
}

impl RenderedPrompt {
    pub fn last_user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone)]
struct Section {
    role: Role,
    body: String,
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    kind: PromptKind,
    sections: Vec<Section>,
    hash: String,
}

impl PromptTemplate {
    pub fn parse(kind: PromptKind, source: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for line in source.lines() {
            let role = match line.trim_end() {
                "@system" => Some(Role::System),
                "@user" => Some(Role::User),
                "@assistant" => Some(Role::Assistant),
                _ => None,
            };
            match (role, sections.last_mut()) {
                (Some(role), _) => sections.push(Section {
                    role,
                    body: String::new(),
                }),
                (None, Some(section)) => {
                    if !section.body.is_empty() {
                        section.body.push('\n');
                    }
                    section.body.push_str(line);
                }
                (None, None) if line.trim().is_empty() => {}
                (None, None) => {
                    return Err(Error::PromptTemplate(
                        kind.file_name().into(),
                        "text before the first role header".into(),
                    ))
                }
            }
        }
        for s in &mut sections {
            let trimmed = s.body.trim_end_matches('\n').to_string();
            s.body = trimmed;
        }
        match sections.first() {
            Some(s) if s.role == Role::System => {}
            _ => {
                return Err(Error::PromptTemplate(
                    kind.file_name().into(),
                    "first section must be @system".into(),
                ))
            }
        }
        if sections.iter().any(|s| s.body.trim().is_empty()) {
            return Err(Error::PromptTemplate(
                kind.file_name().into(),
                "empty section".into(),
            ));
        }
        let hash = hex::encode(Sha256::digest(source.as_bytes()));
        Ok(PromptTemplate {
            kind,
            sections,
            hash,
        })
    }

    pub fn kind(&self) -> PromptKind {
        self.kind
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<RenderedPrompt> {
        let messages = self
            .sections
            .iter()
            .map(|s| {
                Ok(ChatMessage {
                    role: s.role,
                    content: substitute(self.kind, &s.body, values)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RenderedPrompt {
            prompt_kind: self.kind,
            messages,
            prompt_hash: self.hash.clone(),
        })
    }
}

fn substitute(kind: PromptKind, body: &str, values: &BTreeMap<&str, String>) -> Result<String> {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        let name = &after[..name_len];
        let closes = after[name_len..].starts_with('}');
        if closes && PLACEHOLDERS.contains(&name) {
            let value = values.get(name).ok_or_else(|| Error::UnfilledPlaceholder {
                template: kind.file_name().into(),
                name: name.into(),
            })?;
            out.push_str(value);
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Serializes sentences as a bracketed, quoted, comma-separated array:
/// `["first.", "second."]`.
pub fn sentence_array(sentences: &[String]) -> String {
    let items: Vec<String> = sentences
        .iter()
        .map(|s| serde_json::to_string(s).expect("string serializes"))
        .collect();
    format!("[{}]", items.join(", "))
}

/// The six templates used by one run.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<PromptKind, PromptTemplate>,
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let templates = PromptKind::ALL
            .into_iter()
            .map(|k| {
                let t = PromptTemplate::parse(k, k.builtin_source())
                    .expect("builtin prompt templates parse");
                (k, t)
            })
            .collect();
        PromptLibrary { templates }
    }

    /// Loads `<dir>/<kind>.prompt` files, falling back to the builtin
    /// template for any file that is absent.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut lib = Self::builtin();
        for kind in PromptKind::ALL {
            let path = dir.join(kind.file_name());
            if path.exists() {
                let source = std::fs::read_to_string(&path)?;
                lib.templates.insert(kind, PromptTemplate::parse(kind, &source)?);
            }
        }
        Ok(lib)
    }

    pub fn template(&self, kind: PromptKind) -> &PromptTemplate {
        &self.templates[&kind]
    }

    pub fn hashes(&self) -> BTreeMap<PromptKind, String> {
        self.templates
            .iter()
            .map(|(k, t)| (*k, t.hash.clone()))
            .collect()
    }

    pub fn bias_definition(&self, n: usize, spec: &BiasSpec) -> Result<RenderedPrompt> {
        if n == 0 {
            return Err(Error::InvalidCount);
        }
        spec.validate()?;
        let values = BTreeMap::from([
            ("N", n.to_string()),
            ("bias_type", spec.bias_type.clone()),
            ("identity_terms", spec.identity_terms.join(",")),
        ]);
        self.template(PromptKind::Bdp).render(&values)
    }

    pub fn sentence_generation(
        &self,
        n: usize,
        identity_term: &str,
        concept_term: &str,
    ) -> Result<RenderedPrompt> {
        if n == 0 {
            return Err(Error::InvalidCount);
        }
        non_empty("identity term", identity_term)?;
        non_empty("concept term", concept_term)?;
        let values = BTreeMap::from([
            ("N", n.to_string()),
            ("identity_term", identity_term.trim().to_string()),
            ("concept_term", concept_term.trim().to_string()),
        ]);
        self.template(PromptKind::Sgp).render(&values)
    }

    pub fn counterfactual(
        &self,
        term: &str,
        other: &str,
        sentences: &[String],
    ) -> Result<RenderedPrompt> {
        non_empty("term", term)?;
        non_empty("other", other)?;
        if term.trim() == other.trim() {
            return Err(Error::DegenerateCounterfactual(term.trim().into()));
        }
        non_empty_list(sentences)?;
        let values = BTreeMap::from([
            ("term", term.trim().to_string()),
            ("other", other.trim().to_string()),
            ("sentences", sentence_array(sentences)),
        ]);
        self.template(PromptKind::Cfsp).render(&values)
    }

    pub fn lexical(&self, sentence: &str) -> Result<RenderedPrompt> {
        non_empty("sentence", sentence)?;
        let values = BTreeMap::from([("sentence", sentence.to_string())]);
        self.template(PromptKind::Ldp).render(&values)
    }

    pub fn syntactic(&self, sentences: &[String]) -> Result<RenderedPrompt> {
        non_empty_list(sentences)?;
        let values = BTreeMap::from([("sentences", sentence_array(sentences))]);
        self.template(PromptKind::Sydp).render(&values)
    }

    pub fn semantic(&self, sentences: &[String]) -> Result<RenderedPrompt> {
        non_empty_list(sentences)?;
        let values = BTreeMap::from([("sentences", sentence_array(sentences))]);
        self.template(PromptKind::Sedp).render(&values)
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

fn non_empty(what: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        Err(Error::InvalidArgument(format!("{what} is empty")))
    } else {
        Ok(())
    }
}

fn non_empty_list(sentences: &[String]) -> Result<()> {
    if sentences.is_empty() {
        return Err(Error::InvalidArgument("sentence list is empty".into()));
    }
    if sentences.iter().any(|s| s.trim().is_empty()) {
        return Err(Error::InvalidArgument("sentence list has an empty entry".into()));
    }
    Ok(())
}

pub fn render_bias_definition(n: usize, spec: &BiasSpec) -> Result<RenderedPrompt> {
    PromptLibrary::builtin().bias_definition(n, spec)
}

pub fn render_sentence_generation(
    n: usize,
    identity_term: &str,
    concept_term: &str,
) -> Result<RenderedPrompt> {
    PromptLibrary::builtin().sentence_generation(n, identity_term, concept_term)
}

pub fn render_counterfactual(term: &str, other: &str, sentences: &[String]) -> Result<RenderedPrompt> {
    PromptLibrary::builtin().counterfactual(term, other, sentences)
}

pub fn render_lexical(sentence: &str) -> Result<RenderedPrompt> {
    PromptLibrary::builtin().lexical(sentence)
}

pub fn render_syntactic(sentences: &[String]) -> Result<RenderedPrompt> {
    PromptLibrary::builtin().syntactic(sentences)
}

pub fn render_semantic(sentences: &[String]) -> Result<RenderedPrompt> {
    PromptLibrary::builtin().semantic(sentences)
}
