//! Automatic filtering and annotation-driven curation of test sets.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::{
    normalize_text, AnnotationRecord, AnnotationVerdict, FilterStatus, TestCase, TestSet,
};
use crate::error::{Error, Result};

pub const IDENTICAL_COUNTERFACTUAL: &str = "identical-counterfactual";

fn has_identical_variants(case: &TestCase) -> bool {
    let mut seen = HashSet::new();
    case.variants
        .iter()
        .any(|v| !seen.insert(normalize_text(&v.text)))
}

/// Marks every active case with two variants that normalize to the same text.
/// Returns the number of cases newly marked.
pub fn filter_identical_counterfactuals(set: &mut TestSet) -> usize {
    let mut marked = 0;
    for case in set.cases.iter_mut().filter(|c| c.is_active()) {
        if has_identical_variants(case) && case.mark(FilterStatus::AutoFiltered, IDENTICAL_COUNTERFACTUAL) {
            marked += 1;
        }
    }
    marked
}

/// Collapses cases with the same id, keeping the first occurrence.
/// Returns the number of cases removed.
pub fn dedupe(set: &mut TestSet) -> usize {
    let before = set.cases.len();
    let mut seen = HashSet::new();
    set.cases.retain(|c| seen.insert(c.id.clone()));
    before - set.cases.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectPolicy {
    /// Rejected when any annotator marks the case invalid.
    #[default]
    AnyReject,
    /// Rejected only when every annotator of the case marks it invalid.
    AllReject,
}

impl std::str::FromStr for RejectPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "any_reject" | "any" => Ok(RejectPolicy::AnyReject),
            "all_reject" | "all" => Ok(RejectPolicy::AllReject),
            _ => Err(Error::InvalidArgument(format!("unknown policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationOutcome {
    pub rejected: usize,
    /// Annotated ids that are not in the set. Their records are ignored.
    pub unknown_case_ids: Vec<String>,
}

/// Applies annotator verdicts under `policy`. Already-filtered cases keep
/// their status. Exact duplicate records are tolerated; two different
/// judgements from one annotator on one case are an integrity error.
pub fn apply_annotations(
    set: &mut TestSet,
    annotations: &[AnnotationRecord],
    policy: RejectPolicy,
) -> Result<AnnotationOutcome> {
    let mut by_case: BTreeMap<&str, BTreeMap<&str, &AnnotationRecord>> = BTreeMap::new();
    for rec in annotations {
        let slot = by_case.entry(&rec.case_id).or_default();
        match slot.get(rec.annotator.as_str()) {
            Some(prev) if !prev.same_judgement(rec) => {
                return Err(Error::Integrity(format!(
                    "annotator `{}` gave conflicting verdicts on case {}",
                    rec.annotator, rec.case_id
                )))
            }
            Some(_) => {}
            None => {
                slot.insert(&rec.annotator, rec);
            }
        }
    }
    let known: HashSet<&str> = set.cases.iter().map(|c| c.id.as_str()).collect();
    let unknown_case_ids: Vec<String> = by_case
        .keys()
        .filter(|id| !known.contains(*id))
        .map(|id| id.to_string())
        .collect();
    let mut rejected = 0;
    for case in set.cases.iter_mut() {
        let Some(records) = by_case.get(case.id.as_str()) else {
            continue;
        };
        let invalid: Vec<_> = records
            .values()
            .filter(|r| r.verdict == AnnotationVerdict::Invalid)
            .collect();
        let reject = match policy {
            RejectPolicy::AnyReject => !invalid.is_empty(),
            RejectPolicy::AllReject => !invalid.is_empty() && invalid.len() == records.len(),
        };
        if reject {
            let reason = invalid[0].reason.map(|r| r.as_str()).unwrap_or("OTHER");
            if case.mark(FilterStatus::AnnotatorRejected, reason) {
                rejected += 1;
            }
        }
    }
    Ok(AnnotationOutcome {
        rejected,
        unknown_case_ids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonCount {
    pub status: FilterStatus,
    pub reason: String,
    pub count: usize,
    /// Share of all filtered cases.
    pub percent_of_filtered: f64,
    /// Share of all cases in the set.
    pub percent_of_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: usize,
    pub active: usize,
    pub auto_filtered: usize,
    pub annotator_rejected: usize,
    pub duplicates_removed: usize,
    pub reasons: Vec<ReasonCount>,
}

pub fn filter_report(set: &TestSet, duplicates_removed: usize) -> FilterReport {
    let mut counts: BTreeMap<(FilterStatus, String), usize> = BTreeMap::new();
    let mut by_status: HashMap<FilterStatus, usize> = HashMap::new();
    for c in &set.cases {
        *by_status.entry(c.filter_status).or_default() += 1;
        if !c.is_active() {
            let reason = c.filter_reason.clone().unwrap_or_default();
            *counts.entry((c.filter_status, reason)).or_default() += 1;
        }
    }
    let total = set.cases.len();
    let filtered = total - by_status.get(&FilterStatus::Active).copied().unwrap_or(0);
    let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    FilterReport {
        total,
        active: total - filtered,
        auto_filtered: by_status.get(&FilterStatus::AutoFiltered).copied().unwrap_or(0),
        annotator_rejected: by_status
            .get(&FilterStatus::AnnotatorRejected)
            .copied()
            .unwrap_or(0),
        duplicates_removed,
        reasons: counts
            .into_iter()
            .map(|((status, reason), count)| ReasonCount {
                status,
                reason,
                count,
                percent_of_filtered: pct(count, filtered),
                percent_of_total: pct(count, total),
            })
            .collect(),
    }
}

/// The curated set: annotations applied, only ACTIVE cases kept.
pub fn export_final(
    set: &TestSet,
    annotations: &[AnnotationRecord],
    policy: RejectPolicy,
) -> Result<(TestSet, FilterReport, AnnotationOutcome)> {
    let mut curated = set.clone();
    let outcome = apply_annotations(&mut curated, annotations, policy)?;
    let report = filter_report(&curated, 0);
    curated.cases.retain(TestCase::is_active);
    Ok((curated, report, outcome))
}
