//! Lenient extraction of sentence lists and concept triplets from LLM replies.

use std::sync::LazyLock;

use biascase_core::{BiasSpec, ConceptTriplet};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, Result};

static ENUMERATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:\(?\d{1,3}[.):\]](?:\s+|$)|[-*•–](?:\s+|$)|\d{1,3}\s+-\s+)").expect("valid regex")
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceList {
    pub sentences: Vec<String>,
    pub count_mismatch: bool,
}

/// Splits a reply into sentences. Understands a quoted array
/// (`["a", "b"]`), numbered or bulleted lines, and bare lines.
pub fn parse_sentence_list(reply: &str, expected: Option<usize>) -> Result<SentenceList> {
    let sentences = parse_array(reply).unwrap_or_else(|| parse_lines(reply));
    let sentences: Vec<String> = sentences
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if sentences.is_empty() {
        return Err(GatewayError::EmptyParse);
    }
    let count_mismatch = expected.is_some_and(|n| n != sentences.len());
    Ok(SentenceList {
        sentences,
        count_mismatch,
    })
}

fn parse_array(reply: &str) -> Option<Vec<String>> {
    let start = reply.find('[')?;
    let end = reply.rfind(']')?;
    if end <= start {
        return None;
    }
    let inner = &reply[start..=end];
    if let Ok(items) = serde_json::from_str::<Vec<String>>(inner) {
        return Some(items);
    }
    // Not valid JSON (single-quoted wrapper, trailing commas, raw newlines):
    // fall back to scanning double-quoted items.
    let items = scan_quoted(&inner[1..inner.len() - 1]);
    (!items.is_empty()).then_some(items)
}

/// Collects `"..."` items. A quote only closes an item when it is followed by
/// a comma, a closing bracket or the end, so apostrophes and inner quotes
/// survive.
fn scan_quoted(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut items = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '"' {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        let mut item = String::new();
        let mut closed = false;
        while j < chars.len() {
            let c = chars[j];
            if c == '\\' && j + 1 < chars.len() {
                item.push(chars[j + 1]);
                j += 2;
                continue;
            }
            if c == '"' {
                let rest = chars[j + 1..].iter().find(|c| !c.is_whitespace());
                if matches!(rest, None | Some(',') | Some(']')) {
                    closed = true;
                    break;
                }
            }
            item.push(c);
            j += 1;
        }
        if !closed {
            break;
        }
        items.push(item);
        i = j + 1;
    }
    items
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim().trim_end_matches(',').trim();
    let pairs = [('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’')];
    for (open, close) in pairs {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            return s[open.len_utf8()..s.len() - close.len_utf8()].trim();
        }
    }
    s
}

fn parse_lines(reply: &str) -> Vec<String> {
    reply
        .lines()
        .map(|line| {
            let line = line.trim().trim_end_matches("/n");
            let line = ENUMERATION.replace(line, "");
            strip_quotes(&line).to_string()
        })
        .filter(|l| !l.is_empty() && l != "[" && l != "]")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletList {
    pub triplets: Vec<ConceptTriplet>,
    /// Entries whose identity term is not part of the bias spec.
    pub dropped_unknown_terms: usize,
}

/// Extracts concept triplets.
///
/// Two shapes are recognised, possibly several per line:
/// `Topic: {he: 'skillful', she: 'uncertain'}` gives one triplet per
/// identity term under the topic; `he: {leader, engineer}` lists concepts
/// for one identity term, and the n-th concepts of different terms share a
/// positional topic.
pub fn parse_triplet_list(reply: &str, spec: &BiasSpec) -> Result<TripletList> {
    let mut triplets = Vec::new();
    let mut dropped = 0;
    for (label, body) in braced_segments(reply) {
        let items: Vec<&str> = body
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if items.iter().any(|i| i.contains(':')) {
            for item in items {
                let Some((term, concept)) = item.split_once(':') else {
                    continue;
                };
                let concept = strip_quotes(concept);
                match spec.resolve_term(strip_quotes(term)) {
                    Some(t) if !concept.is_empty() => triplets.push(ConceptTriplet {
                        topic: label.clone(),
                        identity_term: t.to_string(),
                        concept_term: concept.to_string(),
                    }),
                    Some(_) => {}
                    None => dropped += 1,
                }
            }
        } else if let Some(term) = spec.resolve_term(&label) {
            for (i, concept) in items.iter().enumerate() {
                let concept = strip_quotes(concept);
                if !concept.is_empty() {
                    triplets.push(ConceptTriplet {
                        topic: format!("topic {}", i + 1),
                        identity_term: term.to_string(),
                        concept_term: concept.to_string(),
                    });
                }
            }
        } else {
            dropped += items.len();
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} triplet(s) with identity terms outside the spec");
    }
    if triplets.is_empty() {
        return Err(GatewayError::EmptyParse);
    }
    Ok(TripletList {
        triplets,
        dropped_unknown_terms: dropped,
    })
}

/// Yields `(label, body)` for every `label: {body}` in the reply.
fn braced_segments(reply: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut prefix = String::new();
    let mut chars = reply.chars();
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                let body: String = chars.by_ref().take_while(|c| *c != '}').collect();
                let label = prefix.trim().trim_end_matches(':').trim();
                let label = ENUMERATION.replace(label, "");
                let label = strip_quotes(label.trim_start_matches(',')).to_string();
                out.push((label, body));
                prefix.clear();
            }
            '\n' => prefix.clear(),
            ',' if prefix.trim().is_empty() => {}
            _ => prefix.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_list() {
        let l = parse_sentence_list("1. A cat.\n2. A dog.", Some(2)).unwrap();
        assert_eq!(l.sentences, ["A cat.", "A dog."]);
        assert!(!l.count_mismatch);
    }

    #[test]
    fn json_array() {
        let l = parse_sentence_list(r#"["x", "y"]"#, None).unwrap();
        assert_eq!(l.sentences, ["x", "y"]);
    }

    #[test]
    fn bullets_quotes_and_bare_lines() {
        let reply = "Here you go:\n- \"First one.\"\n* Second one.\n\n3) Third one.";
        let l = parse_sentence_list(reply, Some(4)).unwrap();
        assert_eq!(l.sentences, ["Here you go:", "First one.", "Second one.", "Third one."]);
        assert!(!l.count_mismatch);
        let l = parse_sentence_list(reply, Some(3)).unwrap();
        assert!(l.count_mismatch);
    }

    #[test]
    fn single_quoted_array_with_apostrophes() {
        let reply = "'[ \"I went to my father's house.\", \n\"My niece bit into her \"favourite\" hamburger.\",\"Last.\" ]'";
        let l = parse_sentence_list(reply, Some(3)).unwrap();
        assert_eq!(
            l.sentences,
            ["I went to my father's house.", "My niece bit into her \"favourite\" hamburger.", "Last."]
        );
    }

    #[test]
    fn empty_reply_is_an_error() {
        assert!(matches!(parse_sentence_list("  \n \n", None), Err(GatewayError::EmptyParse)));
        assert!(matches!(parse_sentence_list("[]", None), Err(GatewayError::EmptyParse)));
    }

    #[test]
    fn numbers_inside_sentences_stay() {
        let l = parse_sentence_list("1. She has 2 children.\n2. 10 people came.\n3.5 million watched.", None).unwrap();
        assert_eq!(l.sentences, ["She has 2 children.", "10 people came.", "3.5 million watched."]);
    }

    #[test]
    fn topic_form() {
        let spec = BiasSpec::from_csv_terms("gender", "he,she").unwrap();
        let t = parse_triplet_list("1. Driving Skills: {he: 'skillful', she: 'uncertain'}", &spec).unwrap();
        assert_eq!(t.triplets.len(), 2);
        assert_eq!(t.triplets[0].topic, "Driving Skills");
        assert_eq!(t.triplets[1].concept_term, "uncertain");
    }

    #[test]
    fn unknown_term_dropped() {
        let spec = BiasSpec::from_csv_terms("gender", "he,she").unwrap();
        let t = parse_triplet_list("1. Hobbies: {he: 'fishing', they: 'chess', she: 'yoga'}", &spec).unwrap();
        assert_eq!(t.triplets.len(), 2);
        assert_eq!(t.dropped_unknown_terms, 1);
        assert!(parse_triplet_list("nothing here", &spec).is_err());
    }
}
