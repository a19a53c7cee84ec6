//! Shared data types, canonical text normalization and content-addressed ids.

use std::collections::HashSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::scalar::Score;

/// Canonical comparison form of a sentence.
///
/// NFKC, lowercase, every non-alphanumeric character replaced by a space,
/// whitespace collapsed and trimmed. This is the single notion of "same
/// sentence" used by filtering, dedup and fixture lookups.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.nfkc().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// A bias type and its identity-term set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasSpec {
    pub bias_type: String,
    pub identity_terms: Vec<String>,
}

impl BiasSpec {
    pub fn new<S: Into<String>>(
        bias_type: impl Into<String>,
        identity_terms: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let spec = BiasSpec {
            bias_type: bias_type.into().trim().to_string(),
            identity_terms: identity_terms
                .into_iter()
                .map(|t| t.into().trim().to_string())
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a comma-separated term list, e.g. `"he,she"`.
    pub fn from_csv_terms(bias_type: &str, terms: &str) -> Result<Self> {
        Self::new(bias_type, terms.split(','))
    }

    pub fn validate(&self) -> Result<()> {
        if self.bias_type.trim().is_empty() {
            return Err(Error::InvalidSpec("bias type is empty".into()));
        }
        if self.identity_terms.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 identity terms, got {}",
                self.identity_terms.len()
            )));
        }
        let mut seen = HashSet::new();
        for term in &self.identity_terms {
            let norm = normalize_text(term);
            if norm.is_empty() {
                return Err(Error::InvalidSpec("empty identity term".into()));
            }
            if !seen.insert(norm) {
                return Err(Error::InvalidSpec(format!(
                    "identity term `{term}` duplicates another after normalization"
                )));
            }
        }
        Ok(())
    }

    /// Finds the spec's spelling of `term`, comparing normalized forms.
    pub fn resolve_term(&self, term: &str) -> Option<&str> {
        let norm = normalize_text(term);
        self.identity_terms
            .iter()
            .find(|t| normalize_text(t) == norm)
            .map(String::as_str)
    }

    pub fn contains_term(&self, term: &str) -> bool {
        self.resolve_term(term).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConceptTriplet {
    pub topic: String,
    pub identity_term: String,
    pub concept_term: String,
}

/// Pipeline stage that produced a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Etsg,
    LdaSynonym,
    LdaNegated,
    Syda,
    Seda,
    Imported,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Etsg,
        Stage::LdaSynonym,
        Stage::LdaNegated,
        Stage::Syda,
        Stage::Seda,
        Stage::Imported,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Etsg => "ETSG",
            Stage::LdaSynonym => "LDA_SYNONYM",
            Stage::LdaNegated => "LDA_NEGATED",
            Stage::Syda => "SYDA",
            Stage::Seda => "SEDA",
            Stage::Imported => "IMPORTED",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceVariant {
    pub identity_term: String,
    pub text: String,
    pub stage: Stage,
    pub is_source: bool,
}

impl SentenceVariant {
    pub fn source(identity_term: impl Into<String>, text: impl Into<String>, stage: Stage) -> Self {
        SentenceVariant {
            identity_term: identity_term.into(),
            text: text.into(),
            stage,
            is_source: true,
        }
    }

    pub fn counterfactual(
        identity_term: impl Into<String>,
        text: impl Into<String>,
        stage: Stage,
    ) -> Self {
        SentenceVariant {
            identity_term: identity_term.into(),
            text: text.into(),
            stage,
            is_source: false,
        }
    }

    pub fn imported(identity_term: impl Into<String>, text: impl Into<String>) -> Self {
        Self::counterfactual(identity_term, text, Stage::Imported)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterStatus {
    Active,
    AutoFiltered,
    AnnotatorRejected,
}

impl FilterStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterStatus::Active => "ACTIVE",
            FilterStatus::AutoFiltered => "AUTO_FILTERED",
            FilterStatus::AnnotatorRejected => "ANNOTATOR_REJECTED",
        }
    }
}

/// A counterfactual tuple: one sentence per identity term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub bias_type: String,
    pub concept_term: Option<String>,
    pub topic: Option<String>,
    pub variants: Vec<SentenceVariant>,
    pub parent_id: Option<String>,
    pub filter_status: FilterStatus,
    pub filter_reason: Option<String>,
}

impl TestCase {
    /// Builds an active case and assigns its content id.
    pub fn new(bias_type: impl Into<String>, variants: Vec<SentenceVariant>) -> Result<Self> {
        let mut case = TestCase {
            id: String::new(),
            bias_type: bias_type.into(),
            concept_term: None,
            topic: None,
            variants,
            parent_id: None,
            filter_status: FilterStatus::Active,
            filter_reason: None,
        };
        case.validate()?;
        case.id = case_id(&case)?;
        Ok(case)
    }

    pub fn with_concept(mut self, concept_term: Option<String>, topic: Option<String>) -> Self {
        self.concept_term = concept_term;
        self.topic = topic;
        self
    }

    pub fn with_parent(mut self, parent_id: Option<String>) -> Self {
        self.parent_id = parent_id;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.len() < 2 {
            return Err(Error::MalformedCase(format!(
                "{} variant(s); a counterfactual tuple needs at least 2",
                self.variants.len()
            )));
        }
        let mut terms = HashSet::new();
        for v in &self.variants {
            if v.text.trim().is_empty() {
                return Err(Error::MalformedCase("empty variant text".into()));
            }
            if !terms.insert(v.identity_term.as_str()) {
                return Err(Error::MalformedCase(format!(
                    "identity term `{}` appears twice",
                    v.identity_term
                )));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> Option<&SentenceVariant> {
        self.variants.iter().find(|v| v.is_source)
    }

    /// Stage of the tuple: the source variant's stage, or the first variant's.
    pub fn stage(&self) -> Stage {
        self.source().unwrap_or(&self.variants[0]).stage
    }

    pub fn is_active(&self) -> bool {
        self.filter_status == FilterStatus::Active
    }

    /// Moves an active case to `status`. Statuses never move back to active,
    /// and an already-filtered case keeps its first reason.
    pub fn mark(&mut self, status: FilterStatus, reason: impl Into<String>) -> bool {
        if self.filter_status != FilterStatus::Active || status == FilterStatus::Active {
            return false;
        }
        self.filter_status = status;
        self.filter_reason = Some(reason.into());
        true
    }
}

/// Deterministic id over the bias type and the variants sorted by
/// identity term. Independent of variant order and filter status.
pub fn case_id(case: &TestCase) -> Result<String> {
    if case.variants.len() < 2 {
        return Err(Error::MalformedCase(format!(
            "cannot hash a case with {} variant(s)",
            case.variants.len()
        )));
    }
    let mut pairs: Vec<(&str, &str)> = case
        .variants
        .iter()
        .map(|v| (v.identity_term.as_str(), v.text.as_str()))
        .collect();
    pairs.sort_unstable();

    let mut hasher = Sha256::new();
    hasher.update(b"biascase/case/v1");
    feed(&mut hasher, &case.bias_type);
    for (term, text) in pairs {
        feed(&mut hasher, term);
        feed(&mut hasher, text);
    }
    let digest = hasher.finalize();
    Ok(hex::encode(&digest[..16]))
}

// length-prefixed so field boundaries cannot shift
fn feed(hasher: &mut Sha256, field: &str) {
    hasher.update((field.len() as u64).to_be_bytes());
    hasher.update(field.as_bytes());
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSet {
    pub name: String,
    /// Generated-run id or `import:<dataset>`.
    pub provenance: String,
    pub cases: Vec<TestCase>,
}

impl TestSet {
    pub fn new(name: impl Into<String>, provenance: impl Into<String>, cases: Vec<TestCase>) -> Self {
        TestSet {
            name: name.into(),
            provenance: provenance.into(),
            cases,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for case in &self.cases {
            if !ids.insert(case.id.as_str()) {
                return Err(Error::Integrity(format!("duplicate case id {}", case.id)));
            }
        }
        Ok(())
    }

    pub fn active(&self) -> impl Iterator<Item = &TestCase> {
        self.cases.iter().filter(|c| c.is_active())
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn sort_by_id(&mut self) {
        self.cases.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}

/// A scorer's answer for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentOutput<S = f64> {
    pub label: String,
    pub score: S,
}

impl<S: Score> SentimentOutput<S> {
    pub fn new(label: impl Into<String>, score: S) -> Result<Self> {
        if !score.is_unit_interval() {
            return Err(Error::InvalidArgument(format!(
                "score {score:?} outside [0, 1]"
            )));
        }
        Ok(SentimentOutput {
            label: label.into(),
            score,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig<S = f64> {
    pub threshold: S,
    pub label_mismatch_is_failure: bool,
}

impl<S: Score> EvalConfig<S> {
    /// Thresholds above 1 are rejected: a label mismatch counts as a gap
    /// larger than 1, which only makes sense while the threshold stays ≤ 1.
    pub fn new(threshold: S) -> Result<Self> {
        if threshold <= S::zero() || threshold > S::one() {
            return Err(Error::InvalidThreshold(format!("{threshold:?}")));
        }
        Ok(EvalConfig {
            threshold,
            label_mismatch_is_failure: true,
        })
    }

    pub fn with_label_mismatch(mut self, is_failure: bool) -> Self {
        self.label_mismatch_is_failure = is_failure;
        self
    }
}

impl Default for EvalConfig<f64> {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.2,
            label_mismatch_is_failure: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnnotationVerdict {
    Valid,
    Invalid,
}

/// Why an annotator rejected a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    Misinterpretation,
    InvalidCounterfactual,
    Unnaturalistic,
    InducedBias,
    Other,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Misinterpretation => "MISINTERPRETATION",
            RejectReason::InvalidCounterfactual => "INVALID_COUNTERFACTUAL",
            RejectReason::Unnaturalistic => "UNNATURALISTIC",
            RejectReason::InducedBias => "INDUCED_BIAS",
            RejectReason::Other => "OTHER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub case_id: String,
    pub annotator: String,
    pub verdict: AnnotationVerdict,
    #[serde(default)]
    pub reason: Option<RejectReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub timestamp: DateTime<Utc>,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.annotator.trim().is_empty() {
            return Err(Error::InvalidArgument("annotator is empty".into()));
        }
        if self.verdict == AnnotationVerdict::Invalid && self.reason.is_none() {
            return Err(Error::InvalidArgument(
                "an INVALID verdict needs a reason".into(),
            ));
        }
        Ok(())
    }

    /// Same judgement, ignoring timestamp.
    pub fn same_judgement(&self, other: &AnnotationRecord) -> bool {
        self.case_id == other.case_id
            && self.annotator == other.annotator
            && self.verdict == other.verdict
            && self.reason == other.reason
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str) -> Vec<SentenceVariant> {
        vec![
            SentenceVariant::source("he", a, Stage::Etsg),
            SentenceVariant::counterfactual("she", b, Stage::Etsg),
        ]
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("The CEO spoke."), "the ceo spoke");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("He  said:  'Hi!'"), "he said hi");
        assert_eq!(normalize_text("  ...  "), "");
        // fullwidth letters fold under NFKC
        assert_eq!(normalize_text("ＣＥＯ!"), "ceo");
    }

    #[test]
    fn case_id_ignores_order_and_status() {
        let a = TestCase::new("gender", pair("He ran.", "She ran.")).unwrap();
        let mut reversed = pair("He ran.", "She ran.");
        reversed.reverse();
        let b = TestCase::new("gender", reversed).unwrap();
        assert_eq!(a.id, b.id);

        let mut c = a.clone();
        c.mark(FilterStatus::AutoFiltered, "x");
        assert_eq!(case_id(&c).unwrap(), a.id);
        assert_eq!(a.id, case_id(&a).unwrap());
    }

    #[test]
    fn case_id_sensitive_to_text_and_bias_type() {
        let a = TestCase::new("gender", pair("He ran.", "She ran.")).unwrap();
        let b = TestCase::new("gender", pair("He ran!", "She ran.")).unwrap();
        let c = TestCase::new("race", pair("He ran.", "She ran.")).unwrap();
        assert_ne!(a.id, b.id);
        assert_ne!(a.id, c.id);
    }

    #[test]
    fn case_id_rejects_single_variant() {
        let mut case = TestCase::new("gender", pair("a", "b")).unwrap();
        case.variants.truncate(1);
        assert!(matches!(case_id(&case), Err(Error::MalformedCase(_))));
        assert!(TestCase::new("g", vec![SentenceVariant::imported("x", "t")]).is_err());
    }

    #[test]
    fn duplicate_identity_terms_rejected() {
        let v = vec![
            SentenceVariant::imported("he", "a"),
            SentenceVariant::imported("he", "b"),
        ];
        assert!(TestCase::new("gender", v).is_err());
    }

    #[test]
    fn bias_spec_validation() {
        assert!(BiasSpec::from_csv_terms("gender", "he,she").is_ok());
        assert!(BiasSpec::from_csv_terms("gender", "he").is_err());
        assert!(BiasSpec::from_csv_terms("", "he,she").is_err());
        assert!(BiasSpec::from_csv_terms("gender", "He,he.").is_err());
        assert!(BiasSpec::from_csv_terms("gender", "he,").is_err());
        let spec = BiasSpec::from_csv_terms("race", "Black, Asian").unwrap();
        assert_eq!(spec.identity_terms, vec!["Black", "Asian"]);
        assert_eq!(spec.resolve_term("asian"), Some("Asian"));
    }

    #[test]
    fn mark_is_monotone() {
        let mut case = TestCase::new("gender", pair("a", "b")).unwrap();
        assert!(case.mark(FilterStatus::AutoFiltered, "first"));
        assert!(!case.mark(FilterStatus::AnnotatorRejected, "second"));
        assert!(!case.mark(FilterStatus::Active, "back"));
        assert_eq!(case.filter_reason.as_deref(), Some("first"));
    }

    #[test]
    fn eval_config_bounds() {
        assert!(EvalConfig::new(0.2f64).is_ok());
        assert!(EvalConfig::new(1.0f64).is_ok());
        assert!(EvalConfig::new(0.0f64).is_err());
        assert!(EvalConfig::new(1.01f64).is_err());
        assert_eq!(EvalConfig::default().threshold, 0.2);
    }

    #[test]
    fn sentiment_output_range() {
        assert!(SentimentOutput::new("POSITIVE", 0.98).is_ok());
        assert!(SentimentOutput::new("POSITIVE", 1.5).is_err());
        assert!(SentimentOutput::new("POSITIVE", -0.1f32).is_err());
    }

    #[test]
    fn invalid_annotation_needs_reason() {
        let mut rec = AnnotationRecord {
            case_id: "c".into(),
            annotator: "a".into(),
            verdict: AnnotationVerdict::Invalid,
            reason: None,
            note: None,
            timestamp: Utc::now(),
        };
        assert!(rec.validate().is_err());
        rec.reason = Some(RejectReason::Unnaturalistic);
        assert!(rec.validate().is_ok());
    }

    #[test]
    fn stage_round_trips_through_str() {
        for st in Stage::ALL {
            assert_eq!(st.as_str().parse::<Stage>().unwrap(), st);
            let json = serde_json::to_string(&st).unwrap();
            assert_eq!(json, format!("\"{}\"", st.as_str()));
        }
    }
}
