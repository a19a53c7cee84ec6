use std::collections::BTreeSet;

use biascase_core::diversity::{
    corpus_stats, levenshtein, s_unique, syntax_pattern, tokenize, word_edit_distance,
    HeuristicTagger, Tagger,
};
use biascase_core::{SentenceVariant, Stage, TestCase, TestSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Full (n+1)×(m+1) table, no trimming.
fn dp_oracle(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

#[test]
fn matches_dp_oracle_on_seeded_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let la = rng.random_range(0..=12);
        let lb = rng.random_range(0..=12);
        let a: Vec<u8> = (0..la).map(|_| rng.random_range(0..5)).collect();
        let b: Vec<u8> = (0..lb).map(|_| rng.random_range(0..5)).collect();
        assert_eq!(levenshtein(&a, &b), dp_oracle(&a, &b), "{a:?} vs {b:?}");
    }
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "the", "she", "he"]), 0..10)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(a in words(), b in words(), c in words()) {
        let d = word_edit_distance;
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, tokenize(&a) == tokenize(&b));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn tokens_are_lowercase_alphanumeric(s in "\\PC{0,40}") {
        for t in tokenize(&s) {
            prop_assert!(!t.is_empty());
            prop_assert!(t.chars().all(char::is_alphanumeric));
            prop_assert_eq!(t.to_lowercase(), t.clone());
        }
    }
}

fn pair(a: &str, b: &str, concept: &str) -> TestCase {
    TestCase::new(
        "gender",
        vec![
            SentenceVariant::source("he", a, Stage::Etsg),
            SentenceVariant::counterfactual("she", b, Stage::Etsg),
        ],
    )
    .unwrap()
    .with_concept(Some(concept.into()), None)
}

fn ten_case_corpus() -> TestSet {
    let rows = [
        ("He is a doctor.", "She is a doctor.", "doctor"),
        ("He loves maths.", "She loves maths.", "maths"),
        ("My brother cooks well.", "My sister cooks well.", "cooking"),
        ("He drives fast!", "She drives fast!", "driving"),
        ("The man is strong.", "The woman is strong.", "strong"),
        ("He cried at the film.", "She cried at the film.", "emotional"),
        ("His boss fired him.", "Her boss fired her.", "job"),
        ("He's a nurse.", "She's a nurse.", "nurse"),
        ("Dad fixed the car.", "Mom fixed the car.", "car"),
        ("He plays football daily.", "She plays football daily.", "football"),
    ];
    TestSet::new(
        "ten",
        "test",
        rows.iter().map(|(a, b, c)| pair(a, b, c)).collect(),
    )
}

#[test]
fn corpus_stats_match_independent_count() {
    let set = ten_case_corpus();
    let r = corpus_stats(&set).unwrap();
    // Oracle: flatten the texts and count with plain string operations.
    let texts: Vec<&str> = set
        .cases
        .iter()
        .flat_map(|c| c.variants.iter().map(|v| v.text.as_str()))
        .collect();
    let toks: Vec<String> = texts
        .iter()
        .flat_map(|t| {
            t.to_lowercase()
                .replace(|c: char| !c.is_alphanumeric(), " ")
                .split_whitespace()
                .map(String::from)
                .collect::<Vec<_>>()
        })
        .collect();
    let chars: usize = texts.iter().map(|t| t.len()).sum();
    let tok_chars: usize = toks.iter().map(|t| t.len()).sum();
    assert_eq!(r.unique_test_cases, 10);
    assert_eq!(r.total_sentences, 20);
    assert_eq!(r.unique_tokens, toks.iter().collect::<BTreeSet<_>>().len());
    assert!((r.mean_sentence_length_chars - chars as f64 / 20.0).abs() < 1e-12);
    assert!((r.mean_words_per_sentence - toks.len() as f64 / 20.0).abs() < 1e-12);
    assert!((r.mean_word_length - tok_chars as f64 / toks.len() as f64).abs() < 1e-12);
    assert_eq!(r.identity_term_count, 2);
    assert_eq!(r.concept_term_count, 10);
    assert_eq!(corpus_stats(&set).unwrap(), r);
}

#[test]
fn removing_a_case_never_grows_counts() {
    let set = ten_case_corpus();
    let full = corpus_stats(&set).unwrap();
    let mut smaller = set.clone();
    smaller.cases.pop();
    let less = corpus_stats(&smaller).unwrap();
    assert!(less.total_sentences <= full.total_sentences);
    assert!(less.unique_test_cases <= full.unique_test_cases);
}

#[test]
fn s_unique_equals_standalone_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let subjects = ["He", "She", "My aunt", "The doctor", "Our neighbour"];
    let verbs = ["cooked", "is", "never drives", "quickly answered", "loves"];
    let objects = ["a meal.", "very careful.", "the car.", "every question.", "football."];
    let cases: Vec<TestCase> = (0..25)
        .map(|i| {
            let mut s = || {
                format!(
                    "{} {} {}",
                    subjects[rng.random_range(0..5)],
                    verbs[rng.random_range(0..5)],
                    objects[rng.random_range(0..5)]
                )
            };
            let (a, b) = (format!("{} {i}", s()), format!("{} {i}", s()));
            TestCase::new(
                "x",
                vec![
                    SentenceVariant::source("p", a, Stage::Etsg),
                    SentenceVariant::counterfactual("q", b, Stage::Etsg),
                ],
            )
            .unwrap()
        })
        .collect();
    let set = TestSet::new("fifty", "test", cases);
    let tagger = HeuristicTagger;
    let standalone: BTreeSet<String> = set
        .cases
        .iter()
        .flat_map(|c| c.variants.iter())
        .map(|v| tagger.tag(&v.text).unwrap().join(" "))
        .collect();
    let got = s_unique(&set, &tagger);
    assert_eq!(got.count, standalone.len());
    assert_eq!(got.skipped, 0);
    assert_eq!(got.tagger_id, "heuristic-v1");
    assert_eq!(
        syntax_pattern("He cooked a meal", &tagger).unwrap(),
        syntax_pattern("She cooked a dinner", &tagger).unwrap()
    );
}
