use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use biascase_core::dataset::load_testset;
use biascase_core::filter::{export_final, AnnotationOutcome, FilterReport, RejectPolicy};
use biascase_core::{
    AnnotationRecord, AnnotationVerdict, FilterStatus, RejectReason, SentenceVariant, Stage,
    TestCase, TestSet,
};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{ReviewError, Result};
use crate::store::{read_log, AnnotationLog};

/// Where one annotator stands on the served test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSession {
    pub testset: PathBuf,
    pub annotator: String,
    /// Position of the next pending case in id order; equals `total` when
    /// the annotator is done.
    pub cursor: usize,
    pub judged: usize,
    pub valid: usize,
    pub invalid: usize,
    pub pending: usize,
    pub total: usize,
    pub started_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub total_active: usize,
    pub doubly_annotated: usize,
    pub annotators: Vec<ReviewSession>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub annotators: (String, String),
    pub shared: usize,
    pub agreeing: usize,
    pub percent_agreement: Option<f64>,
}

/// Percent agreement: the share of cases judged by two or more annotators on
/// which every verdict is the same. Reported as a fraction in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub doubly_annotated: usize,
    pub agreeing: usize,
    pub percent_agreement: Option<f64>,
    pub pairs: Vec<PairAgreement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseView {
    pub id: String,
    pub bias_type: String,
    pub stage: Stage,
    pub topic: Option<String>,
    pub concept_term: Option<String>,
    pub parent_id: Option<String>,
    pub filter_status: FilterStatus,
    pub variants: Vec<SentenceVariant>,
    pub annotations: Vec<AnnotationRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseFilter {
    Pending,
    Judged,
    #[default]
    All,
}

impl std::str::FromStr for CaseFilter {
    type Err = ReviewError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pending" => Ok(CaseFilter::Pending),
            "judged" => Ok(CaseFilter::Judged),
            "all" => Ok(CaseFilter::All),
            _ => Err(ReviewError::Invalid(format!("status must be pending, judged or all, got `{s}`"))),
        }
    }
}

/// A verdict as posted by an annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationInput {
    pub annotator: String,
    pub verdict: AnnotationVerdict,
    #[serde(default)]
    pub reason: Option<RejectReason>,
    #[serde(default)]
    pub note: Option<String>,
}

struct Inner {
    log: AnnotationLog,
    records: Vec<AnnotationRecord>,
    by_key: HashMap<(String, String), usize>,
}

pub struct ReviewState {
    testset_path: PathBuf,
    testset: TestSet,
    /// Active case ids in id order.
    active: Vec<String>,
    inner: Mutex<Inner>,
}

impl ReviewState {
    /// Loads the test set and replays the annotation log.
    pub fn open(testset_path: &Path, annotations_path: &Path) -> Result<Self> {
        let mut testset = load_testset(testset_path)?;
        testset.sort_by_id();
        let records = read_log(annotations_path)?;
        let log = AnnotationLog::open(annotations_path)?;
        Self::assemble(testset_path.to_path_buf(), testset, log, records)
    }

    fn assemble(testset_path: PathBuf, testset: TestSet, log: AnnotationLog, records: Vec<AnnotationRecord>) -> Result<Self> {
        let active = testset.active().map(|c| c.id.clone()).collect();
        let mut by_key = HashMap::new();
        let mut kept = Vec::with_capacity(records.len());
        for rec in records {
            let key = (rec.case_id.clone(), rec.annotator.clone());
            match by_key.get(&key) {
                Some(&i) => {
                    let prev: &AnnotationRecord = &kept[i];
                    if !prev.same_judgement(&rec) {
                        return Err(ReviewError::Core(biascase_core::Error::Integrity(format!(
                            "annotator `{}` has conflicting verdicts on case {} in {}",
                            rec.annotator,
                            rec.case_id,
                            log.path().display()
                        ))));
                    }
                }
                None => {
                    if testset.get(&rec.case_id).is_none() {
                        log::warn!("annotation for unknown case {} ignored", rec.case_id);
                    }
                    by_key.insert(key, kept.len());
                    kept.push(rec);
                }
            }
        }
        Ok(ReviewState {
            testset_path,
            testset,
            active,
            inner: Mutex::new(Inner {
                log,
                records: kept,
                by_key,
            }),
        })
    }

    pub fn testset(&self) -> &TestSet {
        &self.testset
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.inner.lock().expect("review state lock").records.clone()
    }

    fn view(&self, case: &TestCase, records: &[AnnotationRecord], annotator: Option<&str>) -> CaseView {
        let annotations = records
            .iter()
            .filter(|r| r.case_id == case.id && annotator.is_none_or(|a| r.annotator == a))
            .cloned()
            .collect();
        CaseView {
            id: case.id.clone(),
            bias_type: case.bias_type.clone(),
            stage: case.stage(),
            topic: case.topic.clone(),
            concept_term: case.concept_term.clone(),
            parent_id: case.parent_id.clone(),
            filter_status: case.filter_status,
            variants: case.variants.clone(),
            annotations,
        }
    }

    pub fn case(&self, id: &str) -> Result<CaseView> {
        let case = self.testset.get(id).ok_or_else(|| ReviewError::NotFound(id.to_string()))?;
        let inner = self.inner.lock().expect("review state lock");
        Ok(self.view(case, &inner.records, None))
    }

    /// Active cases in id order. `Pending` and `Judged` are relative to
    /// `annotator`, which they require.
    pub fn cases(&self, filter: CaseFilter, annotator: Option<&str>, limit: Option<usize>) -> Result<Vec<CaseView>> {
        if filter != CaseFilter::All && annotator.is_none_or(|a| a.trim().is_empty()) {
            return Err(ReviewError::Invalid("status=pending and status=judged need an annotator".into()));
        }
        let inner = self.inner.lock().expect("review state lock");
        let judged = |id: &String| {
            annotator.is_some_and(|a| inner.by_key.contains_key(&(id.clone(), a.to_string())))
        };
        Ok(self
            .active
            .iter()
            .filter(|id| match filter {
                CaseFilter::Pending => !judged(id),
                CaseFilter::Judged => judged(id),
                CaseFilter::All => true,
            })
            .take(limit.unwrap_or(usize::MAX))
            .map(|id| self.view(self.testset.get(id).expect("active id"), &inner.records, annotator))
            .collect())
    }

    /// Validates, appends to the log and returns the stored record.
    pub fn annotate(&self, case_id: &str, input: AnnotationInput) -> Result<AnnotationRecord> {
        let case = self
            .testset
            .get(case_id)
            .ok_or_else(|| ReviewError::NotFound(case_id.to_string()))?;
        if !case.is_active() {
            return Err(ReviewError::Invalid(format!(
                "case {case_id} is {} and not open for review",
                case.filter_status.as_str()
            )));
        }
        let record = AnnotationRecord {
            case_id: case_id.to_string(),
            annotator: input.annotator.trim().to_string(),
            verdict: input.verdict,
            reason: input.reason,
            note: input.note.filter(|n| !n.trim().is_empty()),
            timestamp: Utc::now(),
        };
        record.validate().map_err(|e| ReviewError::Invalid(e.to_string()))?;

        let mut inner = self.inner.lock().expect("review state lock");
        let key = (record.case_id.clone(), record.annotator.clone());
        if inner.by_key.contains_key(&key) {
            return Err(ReviewError::Conflict {
                case_id: key.0,
                annotator: key.1,
            });
        }
        inner.log.append(&record)?;
        let idx = inner.records.len();
        inner.records.push(record.clone());
        inner.by_key.insert(key, idx);
        Ok(record)
    }

    pub fn progress(&self) -> Progress {
        let inner = self.inner.lock().expect("review state lock");
        let active: BTreeSet<&str> = self.active.iter().map(String::as_str).collect();
        let mut sessions: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
        for r in inner.records.iter().filter(|r| active.contains(r.case_id.as_str())) {
            sessions.entry(r.annotator.as_str()).or_default().push(r);
        }
        let annotators = sessions
            .into_iter()
            .map(|(annotator, recs)| {
                let judged_ids: BTreeSet<&str> = recs.iter().map(|r| r.case_id.as_str()).collect();
                let cursor = self
                    .active
                    .iter()
                    .position(|id| !judged_ids.contains(id.as_str()))
                    .unwrap_or(self.active.len());
                let valid = recs.iter().filter(|r| r.verdict == AnnotationVerdict::Valid).count();
                ReviewSession {
                    testset: self.testset_path.clone(),
                    annotator: annotator.to_string(),
                    cursor,
                    judged: recs.len(),
                    valid,
                    invalid: recs.len() - valid,
                    pending: self.active.len() - recs.len(),
                    total: self.active.len(),
                    started_at: recs.iter().map(|r| r.timestamp).min().expect("non-empty"),
                    updated_at: recs.iter().map(|r| r.timestamp).max().expect("non-empty"),
                }
            })
            .collect();
        Progress {
            total_active: self.active.len(),
            doubly_annotated: agreement_of(&inner.records, &active).doubly_annotated,
            annotators,
        }
    }

    pub fn agreement(&self) -> Agreement {
        let inner = self.inner.lock().expect("review state lock");
        let active: BTreeSet<&str> = self.active.iter().map(String::as_str).collect();
        agreement_of(&inner.records, &active)
    }

    /// Curated set with annotator rejections applied; only active cases.
    pub fn export(&self, policy: RejectPolicy) -> Result<(TestSet, FilterReport, AnnotationOutcome)> {
        let records = self.records();
        Ok(export_final(&self.testset, &records, policy)?)
    }
}

/// Agreement over the given case ids.
pub fn agreement_of(records: &[AnnotationRecord], cases: &BTreeSet<&str>) -> Agreement {
    let mut by_case: BTreeMap<&str, BTreeMap<&str, AnnotationVerdict>> = BTreeMap::new();
    for r in records.iter().filter(|r| cases.contains(r.case_id.as_str())) {
        by_case.entry(&r.case_id).or_default().insert(&r.annotator, r.verdict);
    }
    let shared: Vec<&BTreeMap<&str, AnnotationVerdict>> = by_case.values().filter(|m| m.len() >= 2).collect();
    let agreeing = shared
        .iter()
        .filter(|m| {
            let mut v = m.values();
            let first = v.next().expect("two verdicts");
            v.all(|x| x == first)
        })
        .count();

    let names: BTreeSet<&str> = by_case.values().flat_map(|m| m.keys().copied()).collect();
    let names: Vec<&str> = names.into_iter().collect();
    let mut pairs = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let both: Vec<_> = by_case
                .values()
                .filter_map(|m| Some((m.get(a)?, m.get(b)?)))
                .collect();
            let same = both.iter().filter(|(x, y)| x == y).count();
            pairs.push(PairAgreement {
                annotators: (a.to_string(), b.to_string()),
                shared: both.len(),
                agreeing: same,
                percent_agreement: fraction(same, both.len()),
            });
        }
    }
    Agreement {
        doubly_annotated: shared.len(),
        agreeing,
        percent_agreement: fraction(agreeing, shared.len()),
        pairs,
    }
}

fn fraction(k: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| k as f64 / n as f64)
}
