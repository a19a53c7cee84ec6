//! Counterfactual test verdicts and the bias discovery probability.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{EvalConfig, SentimentOutput, TestCase, TestSet};
use crate::error::{Error, Result};
use crate::scalar::Score;

/// JSON objects need string keys, so (case, model) and (bias, model) keyed
/// maps are written as `[a, b, value]` triples.
mod pair_keyed {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<V: Serialize, S: Serializer>(
        map: &BTreeMap<(String, String), V>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        ser.collect_seq(map.iter().map(|((a, b), v)| (a, b, v)))
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<(String, String), V>, D::Error> {
        let rows: Vec<(String, String, V)> = Vec::deserialize(de)?;
        Ok(rows.into_iter().map(|(a, b, v)| ((a, b), v)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiffReason {
    LabelMismatch,
    ScoreGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairComparison<S = f64> {
    pub differs: bool,
    pub reason: Option<DiffReason>,
    /// Absolute score difference. Recorded even for label mismatches.
    pub gap: S,
}

/// Compares two outputs of the same model on a counterfactual pair.
///
/// Differing labels count as a gap wider than any admissible threshold.
/// Otherwise the pair differs iff `|a.score - b.score| > threshold`.
pub fn pair_differs<S: Score>(
    a: &SentimentOutput<S>,
    b: &SentimentOutput<S>,
    config: &EvalConfig<S>,
) -> PairComparison<S> {
    let gap = a.score.abs_diff(b.score);
    if config.label_mismatch_is_failure && a.label != b.label {
        return PairComparison {
            differs: true,
            reason: Some(DiffReason::LabelMismatch),
            gap,
        };
    }
    if gap > config.threshold {
        PairComparison {
            differs: true,
            reason: Some(DiffReason::ScoreGap),
            gap,
        }
    } else {
        PairComparison {
            differs: false,
            reason: None,
            gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggeringPair<S = f64> {
    /// Variant indices, `i < j`.
    pub pair: (usize, usize),
    pub reason: DiffReason,
    pub gap: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalVerdict<S = f64> {
    pub case_id: String,
    pub model_id: String,
    pub bias_type: String,
    pub threshold: S,
    pub failed: bool,
    pub triggering_pairs: Vec<TriggeringPair<S>>,
}

impl<S: Score> EvalVerdict<S> {
    /// Re-derives the verdict at a threshold no smaller than the one it was
    /// computed at. Pairs are only recorded when they differ, so lowering
    /// the threshold would need the outputs again.
    pub fn at_threshold(&self, threshold: S) -> Result<EvalVerdict<S>> {
        if threshold < self.threshold {
            return Err(Error::InvalidThreshold(format!(
                "{threshold:?} is below the evaluated threshold {:?}",
                self.threshold
            )));
        }
        EvalConfig::new(threshold)?;
        let triggering_pairs: Vec<_> = self
            .triggering_pairs
            .iter()
            .filter(|p| p.reason == DiffReason::LabelMismatch || p.gap > threshold)
            .cloned()
            .collect();
        Ok(EvalVerdict {
            case_id: self.case_id.clone(),
            model_id: self.model_id.clone(),
            bias_type: self.bias_type.clone(),
            threshold,
            failed: !triggering_pairs.is_empty(),
            triggering_pairs,
        })
    }
}

/// F(t, m): fails iff any of the n(n-1)/2 variant pairs differs.
pub fn evaluate_test_case<S: Score>(
    case: &TestCase,
    model_id: &str,
    outputs: &[SentimentOutput<S>],
    config: &EvalConfig<S>,
) -> Result<EvalVerdict<S>> {
    if !case.is_active() {
        return Err(Error::InactiveCase(case.id.clone()));
    }
    if outputs.len() != case.variants.len() {
        return Err(Error::IncompleteScoring {
            case_id: case.id.clone(),
            expected: case.variants.len(),
            got: outputs.len(),
        });
    }
    let mut triggering_pairs = Vec::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let cmp = pair_differs(&outputs[i], &outputs[j], config);
            if let (true, Some(reason)) = (cmp.differs, cmp.reason) {
                triggering_pairs.push(TriggeringPair {
                    pair: (i, j),
                    reason,
                    gap: cmp.gap,
                });
            }
        }
    }
    Ok(EvalVerdict {
        case_id: case.id.clone(),
        model_id: model_id.to_string(),
        bias_type: case.bias_type.clone(),
        threshold: config.threshold,
        failed: !triggering_pairs.is_empty(),
        triggering_pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub case_id: String,
    pub model_id: String,
    pub reason: String,
}

/// Verdicts over T × M, keyed by (case id, model id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix<S = f64> {
    pub config: EvalConfig<S>,
    #[serde(with = "pair_keyed")]
    pub verdicts: BTreeMap<(String, String), EvalVerdict<S>>,
    pub skipped: Vec<SkippedCell>,
    /// Cases left out of T because they were filtered.
    pub excluded_inactive: usize,
}

impl<S: Score> EvalMatrix<S> {
    pub fn new(config: EvalConfig<S>) -> Self {
        EvalMatrix {
            config,
            verdicts: BTreeMap::new(),
            skipped: Vec::new(),
            excluded_inactive: 0,
        }
    }

    pub fn insert(&mut self, verdict: EvalVerdict<S>) {
        self.verdicts
            .insert((verdict.case_id.clone(), verdict.model_id.clone()), verdict);
    }

    pub fn skip(&mut self, case_id: &str, model_id: &str, reason: impl Into<String>) {
        self.skipped.push(SkippedCell {
            case_id: case_id.into(),
            model_id: model_id.into(),
            reason: reason.into(),
        });
    }

    pub fn is_complete(&self) -> bool {
        self.skipped.is_empty()
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn models(&self) -> BTreeSet<&str> {
        self.verdicts.keys().map(|(_, m)| m.as_str()).collect()
    }

    pub fn cases(&self) -> BTreeSet<&str> {
        self.verdicts.keys().map(|(c, _)| c.as_str()).collect()
    }

    pub fn get(&self, case_id: &str, model_id: &str) -> Option<&EvalVerdict<S>> {
        self.verdicts.get(&(case_id.to_string(), model_id.to_string()))
    }

    /// Evaluates every active case of `set` against one model's outputs.
    /// Cells without outputs or with a wrong output count are recorded as
    /// skipped rather than aborting the whole matrix.
    pub fn add_model(
        &mut self,
        set: &TestSet,
        model_id: &str,
        outputs: &BTreeMap<String, Vec<SentimentOutput<S>>>,
    ) {
        let mut excluded = 0;
        for case in &set.cases {
            if !case.is_active() {
                excluded += 1;
                continue;
            }
            match outputs.get(&case.id) {
                None => self.skip(&case.id, model_id, "no scorer output"),
                Some(out) => match evaluate_test_case(case, model_id, out, &self.config) {
                    Ok(v) => self.insert(v),
                    Err(e) => self.skip(&case.id, model_id, e.to_string()),
                },
            }
        }
        self.excluded_inactive = excluded;
    }

    /// The same matrix at a coarser threshold.
    pub fn at_threshold(&self, threshold: S) -> Result<EvalMatrix<S>> {
        let config = EvalConfig {
            threshold,
            label_mismatch_is_failure: self.config.label_mismatch_is_failure,
        };
        let verdicts = self
            .verdicts
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.at_threshold(threshold)?)))
            .collect::<Result<_>>()?;
        Ok(EvalMatrix {
            config,
            verdicts,
            skipped: self.skipped.clone(),
            excluded_inactive: self.excluded_inactive,
        })
    }
}

/// Mean of F(t, m) over all (t, m) cells.
pub fn bias_discovery_probability<S: Score>(matrix: &EvalMatrix<S>) -> Result<S> {
    if !matrix.is_complete() {
        return Err(Error::IncompleteMatrix(matrix.skipped.len()));
    }
    mean_failed(matrix.verdicts.values())
}

fn mean_failed<'a, S: Score>(verdicts: impl Iterator<Item = &'a EvalVerdict<S>>) -> Result<S> {
    let (mut failed, mut total) = (0usize, 0usize);
    for v in verdicts {
        total += 1;
        failed += usize::from(v.failed);
    }
    if total == 0 {
        return Err(Error::UndefinedMetric("empty evaluation matrix".into()));
    }
    Ok(S::from_count(failed) / S::from_count(total))
}

/// Bias discovery probability restricted to each bias type.
pub fn probability_by_bias_type<S: Score>(matrix: &EvalMatrix<S>) -> Result<BTreeMap<String, S>> {
    if !matrix.is_complete() {
        return Err(Error::IncompleteMatrix(matrix.skipped.len()));
    }
    let mut groups: BTreeMap<&str, Vec<&EvalVerdict<S>>> = BTreeMap::new();
    for v in matrix.verdicts.values() {
        groups.entry(v.bias_type.as_str()).or_default().push(v);
    }
    groups
        .into_iter()
        .map(|(b, vs)| Ok((b.to_string(), mean_failed(vs.into_iter())?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRateTable {
    pub threshold: f64,
    /// (bias type, model) → percent of failed cases. Empty groups are absent.
    #[serde(with = "pair_keyed")]
    pub cells: BTreeMap<(String, String), f64>,
    #[serde(with = "pair_keyed")]
    pub case_counts: BTreeMap<(String, String), usize>,
    pub excluded_inactive: usize,
}

impl FailureRateTable {
    pub fn get(&self, bias_type: &str, model_id: &str) -> Option<f64> {
        self.cells
            .get(&(bias_type.to_string(), model_id.to_string()))
            .copied()
    }

    pub fn bias_types(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|(b, _)| b.as_str()).collect()
    }

    pub fn models(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|(_, m)| m.as_str()).collect()
    }
}

/// Percent of failed cases per (bias type, model).
pub fn failure_rate_table<S: Score>(matrix: &EvalMatrix<S>) -> FailureRateTable {
    let mut counts: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for v in matrix.verdicts.values() {
        let e = counts
            .entry((v.bias_type.clone(), v.model_id.clone()))
            .or_default();
        e.0 += usize::from(v.failed);
        e.1 += 1;
    }
    FailureRateTable {
        threshold: matrix.config.threshold.to_f64_lossy(),
        cells: counts
            .iter()
            .map(|(k, (f, n))| (k.clone(), 100.0 * *f as f64 / *n as f64))
            .collect(),
        case_counts: counts.into_iter().map(|(k, (_, n))| (k, n)).collect(),
        excluded_inactive: matrix.excluded_inactive,
    }
}
