use std::collections::BTreeMap;
use std::path::PathBuf;

use biascase_core::dataset::load_testset;
use biascase_core::diversity::{corpus_stats, full_report, HeuristicTagger};
use biascase_core::fairness::{failure_rate_table, probability_by_bias_type};
use biascase_core::report::{
    render_diversity_table, render_failure_table, render_probability_table, ProbabilityColumn,
};
use biascase_core::{EvalConfig, EvalMatrix, SentimentOutput, TestCase};
use biascase_gateway::{Scorer, ScorerFile};
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ensure_file, ensure_parent, read_json, summary, write_json};
use crate::args::{DiversityArgs, EvaluateArgs, ReportArgs};
use crate::error::{CliError, Result};
use crate::meta::CommandMeta;

/// What `evaluate` writes and `report` reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictFile {
    pub dataset: String,
    pub testset: PathBuf,
    /// Computed at the smallest requested threshold; larger ones are
    /// re-derived from the recorded gaps.
    pub matrix: EvalMatrix<f64>,
}

fn sorted_thetas(raw: &[f64]) -> Result<Vec<f64>> {
    let mut t = raw.to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    for &x in &t {
        EvalConfig::new(x)?;
    }
    if t.is_empty() {
        return Err(CliError::usage("no threshold given"));
    }
    Ok(t)
}

pub async fn evaluate(a: EvaluateArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.testset)?;
    ensure_file(&a.scorers)?;
    ensure_parent(&a.out)?;
    if let Some(t) = &a.table {
        ensure_parent(t)?;
    }
    let thetas = sorted_thetas(&a.theta)?;
    meta.input("testset", &a.testset)?;
    meta.input("scorers", &a.scorers)?;
    let set = load_testset(&a.testset)?;
    let file = ScorerFile::load(&a.scorers)?;
    if file.scorers.is_empty() {
        return Err(CliError::usage(format!("{} lists no [[scorer]]", a.scorers.display())));
    }
    meta.settings(json!({"thresholds": thetas, "scorers": file.scorers}));
    let scorers = file
        .scorers
        .into_iter()
        .map(Scorer::new)
        .collect::<Result<Vec<_>, _>>()?;

    let active: Vec<&TestCase> = set.active().collect();
    let texts: Vec<String> = active
        .iter()
        .flat_map(|c| c.variants.iter().map(|v| v.text.clone()))
        .collect();
    if texts.is_empty() {
        return Err(CliError::run("empty", format!("{} has no active cases", a.testset.display())));
    }

    let config = EvalConfig::new(thetas[0])?;
    let mut matrix = EvalMatrix::new(config);
    let replies = join_all(scorers.iter().map(|s| s.score_batch(&texts))).await;
    for (scorer, reply) in scorers.iter().zip(replies) {
        let model = scorer.model_id();
        match reply {
            Ok(outputs) => {
                let mut per_case: BTreeMap<String, Vec<SentimentOutput>> = BTreeMap::new();
                let mut it = outputs.into_iter();
                for case in &active {
                    per_case.insert(case.id.clone(), it.by_ref().take(case.variants.len()).collect());
                }
                matrix.add_model(&set, model, &per_case);
            }
            Err(e) => {
                let msg = format!("scorer {model} failed: {e}");
                log::error!("{msg}");
                meta.warnings.push(msg);
                for case in &active {
                    matrix.skip(&case.id, model, e.to_string());
                }
                matrix.excluded_inactive = set.len() - active.len();
            }
        }
    }

    let dataset = a.dataset.clone().unwrap_or_else(|| set.name.clone());
    meta.count("cases", active.len());
    meta.count("excluded_inactive", matrix.excluded_inactive);
    meta.count("models", scorers.len());
    meta.count("verdicts", matrix.len());
    meta.count("skipped", matrix.skipped.len());
    meta.output("verdicts", &a.out);
    let verdicts = VerdictFile {
        dataset: dataset.clone(),
        testset: a.testset.clone(),
        matrix,
    };
    write_json(&a.out, &verdicts)?;
    if !verdicts.matrix.is_complete() {
        return Err(CliError::run(
            "incomplete-matrix",
            format!("{} cell(s) could not be scored", verdicts.matrix.skipped.len()),
        ));
    }

    let mut text = String::new();
    for &t in &thetas {
        let m = verdicts.matrix.at_threshold(t)?;
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&render_failure_table(&[(dataset.clone(), failure_rate_table(&m))], a.format)?);
    }
    print!("{text}");
    if let Some(t) = &a.table {
        std::fs::write(t, &text)?;
        meta.output("table", t);
    }
    Ok(())
}

pub fn diversity(a: DiversityArgs, meta: &mut CommandMeta) -> Result<()> {
    for p in &a.testsets {
        ensure_file(p)?;
    }
    if let Some(o) = &a.out {
        ensure_parent(o)?;
    }
    let mut reports = Vec::new();
    for (i, path) in a.testsets.iter().enumerate() {
        meta.input(&format!("testset:{i}"), path)?;
        let set = load_testset(path)?;
        let report = if a.no_syntax {
            corpus_stats(&set)?
        } else {
            full_report(&set, &HeuristicTagger)?
        };
        meta.count(&format!("{}:sentences", set.name), report.total_sentences);
        reports.push((set.name.clone(), report));
    }
    let text = render_diversity_table(&reports, a.format)?;
    print!("{text}");
    if let Some(o) = &a.out {
        let by_name: BTreeMap<&str, _> = reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
        write_json(o, &by_name)?;
        meta.output("reports", o);
    }
    Ok(())
}

pub fn report(a: ReportArgs, meta: &mut CommandMeta) -> Result<()> {
    for p in &a.verdicts {
        ensure_file(p)?;
    }
    if let Some(o) = &a.out {
        ensure_parent(o)?;
    }
    let mut columns = Vec::new();
    let mut failures = Vec::new();
    let mut threshold: Option<f64> = None;
    for (i, path) in a.verdicts.iter().enumerate() {
        meta.input(&format!("verdicts:{i}"), path)?;
        let file: VerdictFile = read_json(path)?;
        let matrix = match a.theta {
            Some(t) => file.matrix.at_threshold(t)?,
            None => file.matrix,
        };
        let t = matrix.config.threshold;
        match threshold {
            Some(prev) if prev != t => {
                return Err(CliError::usage(format!(
                    "verdict files disagree on the threshold ({prev} vs {t}); pass --theta"
                )))
            }
            _ => threshold = Some(t),
        }
        columns.push(ProbabilityColumn {
            dataset: file.dataset.clone(),
            by_bias_type: probability_by_bias_type(&matrix)?,
        });
        failures.push((file.dataset, failure_rate_table(&matrix)));
    }
    let threshold = threshold.expect("at least one verdict file");
    meta.settings(json!({"threshold": threshold, "format": a.format}));
    let mut text = render_probability_table(&columns, threshold, a.format)?;
    text.push('\n');
    text.push_str(&render_failure_table(&failures, a.format)?);
    match &a.out {
        Some(o) => {
            std::fs::write(o, &text)?;
            meta.output("tables", o);
            summary(json!({"command": "report", "out": o, "datasets": columns.len()}));
        }
        None => print!("{text}"),
    }
    Ok(())
}
