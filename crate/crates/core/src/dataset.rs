//! Native test-set files and importers for external benchmarks.
//!
//! Native format: UTF-8 JSON lines, one case per line, sorted by id.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{
    case_id, normalize_text, FilterStatus, SentenceVariant, TestCase, TestSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseLine {
    id: String,
    bias_type: String,
    topic: Option<String>,
    concept_term: Option<String>,
    parent_id: Option<String>,
    filter_status: FilterStatus,
    filter_reason: Option<String>,
    variants: Vec<SentenceVariant>,
    run_id: String,
}

/// Serializes `set` into the native line format, sorted by case id.
pub fn to_jsonl(set: &TestSet) -> Result<String> {
    let mut cases: Vec<&TestCase> = set.cases.iter().collect();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = String::new();
    for c in cases {
        let line = CaseLine {
            id: c.id.clone(),
            bias_type: c.bias_type.clone(),
            topic: c.topic.clone(),
            concept_term: c.concept_term.clone(),
            parent_id: c.parent_id.clone(),
            filter_status: c.filter_status,
            filter_reason: c.filter_reason.clone(),
            variants: c.variants.clone(),
            run_id: set.provenance.clone(),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_testset(set: &TestSet, path: &Path) -> Result<()> {
    set.validate()?;
    let body = to_jsonl(set)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

/// Parses native lines. Each stored id is checked against the id
/// recomputed from the case content.
pub fn from_jsonl(name: &str, reader: impl BufRead) -> Result<TestSet> {
    let mut cases = Vec::new();
    let mut provenance: Option<String> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CaseLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let case = TestCase {
            id: rec.id,
            bias_type: rec.bias_type,
            concept_term: rec.concept_term,
            topic: rec.topic,
            variants: rec.variants,
            parent_id: rec.parent_id,
            filter_status: rec.filter_status,
            filter_reason: rec.filter_reason,
        };
        case.validate().map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let expected = case_id(&case)?;
        if expected != case.id {
            return Err(Error::Integrity(format!(
                "line {}: stored id {} does not match content id {expected}",
                i + 1,
                case.id
            )));
        }
        provenance.get_or_insert(rec.run_id);
        cases.push(case);
    }
    let set = TestSet::new(name, provenance.unwrap_or_default(), cases);
    set.validate()?;
    Ok(set)
}

pub fn load_testset(path: &Path) -> Result<TestSet> {
    let f = fs::File::open(path)?;
    from_jsonl(&stem(path), BufReader::new(f))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "testset".into())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub source: String,
    pub rows_read: usize,
    pub cases_produced: usize,
    /// Rows consumed by produced cases (before dedupe).
    pub rows_paired: usize,
    pub duplicates_removed: usize,
    pub rows_skipped: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl ImportReport {
    fn new(source: &str) -> Self {
        ImportReport {
            source: source.into(),
            ..Default::default()
        }
    }

    fn skip(&mut self, reason: impl Into<String>, n: usize) {
        if n > 0 {
            *self.rows_skipped.entry(reason.into()).or_default() += n;
        }
    }

    pub fn skipped_total(&self) -> usize {
        self.rows_skipped.values().sum()
    }
}

struct Table {
    rows: Vec<csv::StringRecord>,
    index: HashMap<String, usize>,
}

impl Table {
    fn read(path: &Path, delimiter: u8) -> Result<Table> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .from_path(path)?;
        let index = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Table { rows, index })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    }
}

fn field(row: &csv::StringRecord, i: usize) -> &str {
    row.get(i).unwrap_or("").trim()
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => b'\t',
        _ => b',',
    }
}

/// Pairs a set of cases into a deduplicated, id-sorted set.
fn finish(name: String, provenance: &str, cases: Vec<TestCase>, report: &mut ImportReport) -> TestSet {
    let mut seen = HashSet::new();
    let before = cases.len();
    let mut cases: Vec<TestCase> = cases.into_iter().filter(|c| seen.insert(c.id.clone())).collect();
    report.duplicates_removed = before - cases.len();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    report.cases_produced = cases.len();
    TestSet::new(name, provenance, cases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EecAxis {
    #[default]
    Gender,
    Race,
}

impl std::str::FromStr for EecAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gender" => Ok(EecAxis::Gender),
            "race" => Ok(EecAxis::Race),
            _ => Err(Error::InvalidArgument(format!("unknown EEC axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EecColumns {
    pub sentence: String,
    pub template: String,
    pub gender: String,
    pub race: String,
    pub emotion: String,
    pub emotion_word: String,
}

impl Default for EecColumns {
    fn default() -> Self {
        EecColumns {
            sentence: "Sentence".into(),
            template: "Template".into(),
            gender: "Gender".into(),
            race: "Race".into(),
            emotion: "Emotion".into(),
            emotion_word: "Emotion word".into(),
        }
    }
}

/// Imports the Equity Evaluation Corpus.
///
/// Rows are grouped by template, emotion word and the attribute held fixed
/// (race for the gender axis, gender for the race axis). Within a group the
/// two sides are zipped in file order, so each name or noun phrase is
/// paired with its counterpart at the same position.
pub fn import_eec(path: &Path, axis: EecAxis, cols: &EecColumns) -> Result<(TestSet, ImportReport)> {
    let table = Table::read(path, delimiter_for(path))?;
    let c_sentence = table.column(&cols.sentence)?;
    let c_template = table.column(&cols.template)?;
    let c_gender = table.column(&cols.gender)?;
    let c_race = table.column(&cols.race)?;
    let c_emotion = table.column(&cols.emotion)?;
    let c_word = table.column(&cols.emotion_word)?;
    let mut report = ImportReport::new("eec");
    report.rows_read = table.rows.len();
    if table.rows.is_empty() {
        return Err(Error::Empty(format!("{} has no rows", path.display())));
    }

    let (sides, c_side, c_fixed): ([&str; 2], usize, usize) = match axis {
        EecAxis::Gender => (["female", "male"], c_gender, c_race),
        EecAxis::Race => (["African-American", "European"], c_race, c_gender),
    };
    type Key<'a> = (&'a str, &'a str, &'a str);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, [Vec<&csv::StringRecord>; 2]> = HashMap::new();
    for row in &table.rows {
        if field(row, c_sentence).is_empty() {
            report.skip("empty sentence", 1);
            continue;
        }
        if axis == EecAxis::Race && field(row, c_race).is_empty() {
            report.skip("no race attribute", 1);
            continue;
        }
        let side = field(row, c_side);
        let Some(slot) = sides.iter().position(|s| s.eq_ignore_ascii_case(side)) else {
            report.skip(format!("unrecognised value `{side}`"), 1);
            continue;
        };
        let key = (field(row, c_template), field(row, c_word), field(row, c_fixed));
        let g = groups.entry(key).or_insert_with(|| {
            order.push(key);
            [Vec::new(), Vec::new()]
        });
        g[slot].push(row);
    }

    let bias_type = match axis {
        EecAxis::Gender => "gender",
        EecAxis::Race => "race",
    };
    let mut cases = Vec::new();
    for key in order {
        let [a, b] = &groups[&key];
        let n = a.len().min(b.len());
        report.skip("unpaired", a.len() + b.len() - 2 * n);
        for (x, y) in a.iter().zip(b.iter()) {
            let variants = vec![
                SentenceVariant::imported(sides[0], field(x, c_sentence)),
                SentenceVariant::imported(sides[1], field(y, c_sentence)),
            ];
            let word = field(x, c_word);
            let emotion = field(x, c_emotion);
            let case = TestCase::new(bias_type, variants)?.with_concept(
                (!word.is_empty()).then(|| word.to_string()),
                (!emotion.is_empty()).then(|| emotion.to_string()),
            );
            report.rows_paired += 2;
            cases.push(case);
        }
    }
    let set = finish(stem(path), "import:eec", cases, &mut report);
    Ok((set, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrowsColumns {
    pub sent_more: String,
    pub sent_less: String,
    pub bias_type: String,
}

impl Default for CrowsColumns {
    fn default() -> Self {
        CrowsColumns {
            sent_more: "sent_more".into(),
            sent_less: "sent_less".into(),
            bias_type: "bias_type".into(),
        }
    }
}

pub const BIAS_CATEGORIES: [&str; 7] = [
    "age",
    "disability",
    "gender",
    "nationality",
    "race",
    "religion",
    "sexual orientation",
];

/// Maps CrowS-Pairs category names onto the seven bias types. Returns
/// `None` for categories outside them.
pub fn map_crows_category(raw: &str) -> Option<&'static str> {
    let norm = normalize_text(raw);
    match norm.as_str() {
        "race color" | "race" => Some("race"),
        "sexual orientation" => Some("sexual orientation"),
        "gender" | "sex" => Some("gender"),
        "age" => Some("age"),
        "disability" => Some("disability"),
        "nationality" => Some("nationality"),
        "religion" => Some("religion"),
        _ => None,
    }
}

/// Imports CrowS-Pairs: one two-variant case per row, identity terms
/// "more" and "less". Unknown categories are kept verbatim with a warning.
pub fn import_crows_pairs(path: &Path, cols: &CrowsColumns) -> Result<(TestSet, ImportReport)> {
    let table = Table::read(path, delimiter_for(path))?;
    let c_more = table.column(&cols.sent_more)?;
    let c_less = table.column(&cols.sent_less)?;
    let c_bias = table.column(&cols.bias_type)?;
    let mut report = ImportReport::new("crows-pairs");
    report.rows_read = table.rows.len();
    if table.rows.is_empty() {
        return Err(Error::Empty(format!("{} has no rows", path.display())));
    }
    let mut unknown: BTreeMap<String, usize> = BTreeMap::new();
    let mut cases = Vec::new();
    for row in &table.rows {
        let (more, less, raw_bias) = (field(row, c_more), field(row, c_less), field(row, c_bias));
        if more.is_empty() || less.is_empty() {
            report.skip("empty sentence", 1);
            continue;
        }
        let bias = match map_crows_category(raw_bias) {
            Some(b) => b.to_string(),
            None => {
                *unknown.entry(raw_bias.to_string()).or_default() += 1;
                raw_bias.to_string()
            }
        };
        let variants = vec![
            SentenceVariant::imported("more", more),
            SentenceVariant::imported("less", less),
        ];
        cases.push(TestCase::new(bias, variants)?);
        report.rows_paired += 1;
    }
    for (cat, n) in unknown {
        let msg = format!("category `{cat}` kept verbatim ({n} rows)");
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    let set = finish(stem(path), "import:crows-pairs", cases, &mut report);
    Ok((set, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasTestGptColumns {
    pub sentence: String,
    pub alt_sentence: String,
    pub group_term: String,
    pub alt_group_term: String,
    pub attribute_term: String,
    pub bias_spec: String,
}

impl Default for BiasTestGptColumns {
    fn default() -> Self {
        BiasTestGptColumns {
            sentence: "sentence".into(),
            alt_sentence: "alt_sentence".into(),
            group_term: "org_grp_term".into(),
            alt_group_term: "alt_grp_term".into(),
            attribute_term: "att_term".into(),
            bias_spec: "bias_spec".into(),
        }
    }
}

/// Imports a BiasTestGPT tabular export: each row holds a sentence and its
/// group-swapped alternative. Accepts CSV, TSV or JSON lines.
pub fn import_biastestgpt(path: &Path, cols: &BiasTestGptColumns) -> Result<(TestSet, ImportReport)> {
    let rows = read_records(path)?;
    let mut report = ImportReport::new("biastestgpt");
    report.rows_read = rows.len();
    if rows.is_empty() {
        return Err(Error::Empty(format!("{} has no rows", path.display())));
    }
    for name in [
        &cols.sentence,
        &cols.alt_sentence,
        &cols.group_term,
        &cols.alt_group_term,
        &cols.bias_spec,
    ] {
        if !rows[0].contains_key(name.as_str()) {
            return Err(Error::Schema(format!("missing column `{name}`")));
        }
    }
    let get = |r: &BTreeMap<String, String>, k: &str| r.get(k).map(|s| s.trim().to_string()).unwrap_or_default();
    let mut cases = Vec::new();
    for row in &rows {
        let (s, alt) = (get(row, &cols.sentence), get(row, &cols.alt_sentence));
        let (g, alt_g) = (get(row, &cols.group_term), get(row, &cols.alt_group_term));
        if s.is_empty() || alt.is_empty() {
            report.skip("empty sentence", 1);
            continue;
        }
        if g.is_empty() || alt_g.is_empty() || g == alt_g {
            report.skip("missing or identical group terms", 1);
            continue;
        }
        let attr = get(row, &cols.attribute_term);
        let variants = vec![SentenceVariant::imported(g, s), SentenceVariant::imported(alt_g, alt)];
        let case = TestCase::new(get(row, &cols.bias_spec), variants)?
            .with_concept((!attr.is_empty()).then_some(attr), None);
        cases.push(case);
        report.rows_paired += 1;
    }
    let set = finish(stem(path), "import:biastestgpt", cases, &mut report);
    Ok((set, report))
}

fn read_records(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext == "jsonl" || ext == "json" {
        let text = fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let obj: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(line).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            rows.push(
                obj.into_iter()
                    .map(|(k, v)| {
                        let s = match v {
                            serde_json::Value::String(s) => s,
                            serde_json::Value::Null => String::new(),
                            other => other.to_string(),
                        };
                        (k, s)
                    })
                    .collect(),
            );
        }
        return Ok(rows);
    }
    let table = Table::read(path, delimiter_for(path))?;
    let mut names: Vec<(&String, &usize)> = table.index.iter().collect();
    names.sort_by_key(|(_, i)| **i);
    Ok(table
        .rows
        .iter()
        .map(|r| {
            names
                .iter()
                .map(|(k, i)| ((*k).clone(), field(r, **i).to_string()))
                .collect()
        })
        .collect())
}
