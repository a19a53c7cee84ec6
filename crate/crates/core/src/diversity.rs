//! Corpus statistics, token-level edit distance and syntax-pattern counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::{Stage, TestSet};
use crate::error::{Error, Result};

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub unique_test_cases: usize,
    pub total_sentences: usize,
    pub unique_tokens: usize,
    pub mean_sentence_length_chars: f64,
    pub mean_words_per_sentence: f64,
    pub mean_word_length: f64,
    pub identity_term_count: usize,
    pub concept_term_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_unique: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tagger_id: Option<String>,
    #[serde(default)]
    pub tagger_skips: usize,
    #[serde(default)]
    pub paired_edit_distance_by_stage: BTreeMap<Stage, f64>,
    /// Cases left out because they are not ACTIVE.
    #[serde(default)]
    pub excluded_inactive: usize,
}

/// Table-3 style statistics over the ACTIVE cases of `set`.
///
/// Sentence length counts characters (not bytes), spaces included. Word
/// length is the mean character count per token.
pub fn corpus_stats(set: &TestSet) -> Result<DiversityReport> {
    let active: Vec<_> = set.active().collect();
    if active.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "test set `{}` has no active cases",
            set.name
        )));
    }
    let mut vocab = BTreeSet::new();
    let mut identity_terms = BTreeSet::new();
    let mut concepts = BTreeSet::new();
    let (mut sentences, mut chars, mut words, mut word_chars) = (0usize, 0usize, 0usize, 0usize);
    for case in &active {
        if let Some(c) = &case.concept_term {
            concepts.insert(c.as_str());
        }
        for v in &case.variants {
            identity_terms.insert(v.identity_term.as_str());
            sentences += 1;
            chars += v.text.chars().count();
            for tok in tokenize(&v.text) {
                words += 1;
                word_chars += tok.chars().count();
                vocab.insert(tok);
            }
        }
    }
    Ok(DiversityReport {
        unique_test_cases: active.len(),
        total_sentences: sentences,
        unique_tokens: vocab.len(),
        mean_sentence_length_chars: chars as f64 / sentences as f64,
        mean_words_per_sentence: words as f64 / sentences as f64,
        mean_word_length: if words == 0 {
            0.0
        } else {
            word_chars as f64 / words as f64
        },
        identity_term_count: identity_terms.len(),
        concept_term_count: concepts.len(),
        s_unique: None,
        tagger_id: None,
        tagger_skips: 0,
        paired_edit_distance_by_stage: BTreeMap::new(),
        excluded_inactive: set.len() - active.len(),
    })
}

/// Levenshtein distance between two sequences.
///
/// Two-row dynamic programme after stripping the common prefix and suffix.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Token-level Levenshtein distance using [`tokenize`].
pub fn word_edit_distance(a: &str, b: &str) -> usize {
    levenshtein(&tokenize(a), &tokenize(b))
}

pub const PAIRED_STAGES: [Stage; 3] = [Stage::LdaSynonym, Stage::LdaNegated, Stage::Syda];

/// Mean distance between each active `stage` case's source sentence and the
/// source sentence of its ETSG parent. Cases whose parent is not an ETSG case
/// in `set` (e.g. a SEDA group id) are not paired.
pub fn paired_stage_distance(set: &TestSet, stage: Stage) -> Result<f64> {
    if !PAIRED_STAGES.contains(&stage) {
        return Err(Error::InvalidArgument(format!(
            "no paired distance is defined for stage {stage}"
        )));
    }
    let by_id: HashMap<&str, _> = set.cases.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut distances = Vec::new();
    for case in set.active().filter(|c| c.stage() == stage) {
        let Some(parent) = case.parent_id.as_deref().and_then(|p| by_id.get(p)) else {
            continue;
        };
        if parent.stage() != Stage::Etsg {
            continue;
        }
        let (Some(child_src), Some(parent_src)) = (case.source(), parent.source()) else {
            continue;
        };
        distances.push(word_edit_distance(&child_src.text, &parent_src.text));
    }
    if distances.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no {stage} cases with an ETSG parent"
        )));
    }
    Ok(distances.iter().sum::<usize>() as f64 / distances.len() as f64)
}

/// Maps a sentence to a sequence of coarse part-of-speech tags.
pub trait Tagger: Send + Sync {
    fn id(&self) -> &str;
    fn tag(&self, sentence: &str) -> Result<Vec<&'static str>>;
}

/// Deterministic tagger built from closed-class word lists and suffix rules.
/// Anything unmatched is a NOUN.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicTagger;

const DET: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "every", "each", "some", "any", "no",
    "all", "both", "either", "neither", "another", "such", "what", "which", "whose",
];
const PRON: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "he", "him", "his",
    "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our", "ours",
    "ourselves", "they", "them", "their", "theirs", "themselves", "who", "whom", "someone",
    "anyone", "everyone", "nobody", "something", "anything", "everything", "nothing", "one",
];
const ADP: &[&str] = &[
    "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "of", "off",
    "over", "under", "within", "without", "among", "across", "behind", "beyond", "despite",
    "toward", "towards", "upon", "like", "as", "around", "near", "since", "until",
];
const CCONJ: &[&str] = &["and", "or", "but", "nor", "yet", "so"];
const SCONJ: &[&str] = &["because", "although", "though", "while", "if", "unless", "whereas", "whether", "when", "where", "than"];
const AUX: &[&str] = &[
    "be", "am", "is", "are", "was", "were", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might", "must",
    "s", "re", "ve", "ll", "d", "m",
];
const PART: &[&str] = &["not", "t", "never"];
const ADV: &[&str] = &[
    "very", "always", "often", "also", "just", "too", "quite", "really", "still", "already",
    "even", "ever", "here", "there", "now", "then", "again", "once", "soon", "rather", "almost",
    "only", "well", "much", "more", "most", "less", "least", "how", "why",
];
const NUM: &[&str] = &[
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred", "thousand",
];

impl HeuristicTagger {
    fn tag_token(tok: &str) -> &'static str {
        let lists: [(&[&str], &'static str); 10] = [
            (DET, "DET"),
            (PRON, "PRON"),
            (AUX, "AUX"),
            (PART, "PART"),
            (CCONJ, "CCONJ"),
            (SCONJ, "SCONJ"),
            (ADP, "ADP"),
            (ADV, "ADV"),
            (NUM, "NUM"),
            (&[], ""),
        ];
        for (words, tag) in lists {
            if words.contains(&tok) {
                return tag;
            }
        }
        if tok.chars().all(|c| c.is_ascii_digit()) {
            return "NUM";
        }
        let n = tok.chars().count();
        let ends = |suffix: &str| n > suffix.len() + 2 && tok.ends_with(suffix);
        if ends("ly") {
            "ADV"
        } else if ends("ing") || ends("ed") || ends("ize") || ends("ise") || ends("ify") {
            "VERB"
        } else if ends("ous")
            || ends("ful")
            || ends("ive")
            || ends("able")
            || ends("ible")
            || ends("al")
            || ends("ic")
            || ends("less")
            || ends("ish")
            || ends("ent")
            || ends("ant")
        {
            "ADJ"
        } else {
            "NOUN"
        }
    }
}

impl Tagger for HeuristicTagger {
    fn id(&self) -> &str {
        "heuristic-v1"
    }

    fn tag(&self, sentence: &str) -> Result<Vec<&'static str>> {
        Ok(tokenize(sentence)
            .iter()
            .map(|t| Self::tag_token(t))
            .collect())
    }
}

pub fn syntax_pattern(sentence: &str, tagger: &dyn Tagger) -> Result<String> {
    Ok(tagger.tag(sentence)?.join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SUnique {
    pub count: usize,
    pub skipped: usize,
    pub tagger_id: String,
}

/// Number of distinct tag patterns over ACTIVE variant texts. Sentences the
/// tagger fails on are skipped and counted.
pub fn s_unique(set: &TestSet, tagger: &dyn Tagger) -> SUnique {
    let mut patterns = BTreeSet::new();
    let mut skipped = 0;
    for case in set.active() {
        for v in &case.variants {
            match syntax_pattern(&v.text, tagger) {
                Ok(p) => {
                    patterns.insert(p);
                }
                Err(e) => {
                    log::warn!("tagger skipped a sentence in case {}: {e}", case.id);
                    skipped += 1;
                }
            }
        }
    }
    SUnique {
        count: patterns.len(),
        skipped,
        tagger_id: tagger.id().to_string(),
    }
}

/// Corpus statistics plus S-unique and the paired stage distances that are
/// defined for `set`.
pub fn full_report(set: &TestSet, tagger: &dyn Tagger) -> Result<DiversityReport> {
    let mut report = corpus_stats(set)?;
    let s = s_unique(set, tagger);
    report.s_unique = Some(s.count);
    report.tagger_id = Some(s.tagger_id);
    report.tagger_skips = s.skipped;
    for stage in PAIRED_STAGES {
        if let Ok(d) = paired_stage_distance(set, stage) {
            report.paired_edit_distance_by_stage.insert(stage, d);
        }
    }
    Ok(report)
}
