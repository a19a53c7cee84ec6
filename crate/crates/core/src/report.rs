//! Markdown and CSV renderings of the comparison tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diversity::DiversityReport;
use crate::error::{Error, Result};
use crate::fairness::FailureRateTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown table format `{s}`"))),
        }
    }
}

pub const ABSENT: &str = "--";

/// Rounds to three decimals and drops trailing zeros: 0.110 → "0.11".
pub fn format_probability(p: f64) -> String {
    let s = format!("{p:.3}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

pub fn format_percent(p: f64) -> String {
    format!("{p:.1}")
}

fn format_threshold(t: f64) -> String {
    let s = format!("{t:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One dataset's bias discovery probability per bias type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityColumn {
    pub dataset: String,
    pub by_bias_type: std::collections::BTreeMap<String, f64>,
}

struct Grid {
    caption: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Grid {
    fn render(&self, format: TableFormat) -> String {
        let mut out = String::new();
        match format {
            TableFormat::Markdown => {
                let _ = writeln!(out, "{}\n", self.caption);
                let _ = writeln!(out, "| {} |", self.header.join(" | "));
                let seps: Vec<&str> = self.header.iter().map(|_| "---").collect();
                let _ = writeln!(out, "| {} |", seps.join(" | "));
                for row in &self.rows {
                    let _ = writeln!(out, "| {} |", row.join(" | "));
                }
            }
            TableFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).expect("write to memory");
                for row in &self.rows {
                    w.write_record(row).expect("write to memory");
                }
                out = String::from_utf8(w.into_inner().expect("flush to memory"))
                    .expect("csv output is utf-8");
            }
        }
        out
    }
}

/// Bias types as rows, datasets as columns; "--" where a dataset has no
/// cases of that bias type.
pub fn render_probability_table(
    columns: &[ProbabilityColumn],
    threshold: f64,
    format: TableFormat,
) -> Result<String> {
    if columns.is_empty() {
        return Err(Error::Empty("no datasets to tabulate".into()));
    }
    let biases: BTreeSet<&str> = columns
        .iter()
        .flat_map(|c| c.by_bias_type.keys().map(String::as_str))
        .collect();
    let mut header = vec!["Bias type".to_string()];
    header.extend(columns.iter().map(|c| c.dataset.clone()));
    let rows = biases
        .iter()
        .map(|b| {
            let mut row = vec![b.to_string()];
            row.extend(columns.iter().map(|c| {
                c.by_bias_type
                    .get(*b)
                    .map(|p| format_probability(*p))
                    .unwrap_or_else(|| ABSENT.into())
            }));
            row
        })
        .collect();
    Ok(Grid {
        caption: format!(
            "Bias discovery probability (threshold > {})",
            format_threshold(threshold)
        ),
        header,
        rows,
    }
    .render(format))
}

/// Rows are (dataset, bias type), columns are models, cells are percent of
/// failed cases.
pub fn render_failure_table(
    tables: &[(String, FailureRateTable)],
    format: TableFormat,
) -> Result<String> {
    if tables.is_empty() || tables.iter().all(|(_, t)| t.cells.is_empty()) {
        return Err(Error::Empty("no verdicts to tabulate".into()));
    }
    let threshold = tables[0].1.threshold;
    let models: BTreeSet<&str> = tables.iter().flat_map(|(_, t)| t.models()).collect();
    let biases: BTreeSet<&str> = tables.iter().flat_map(|(_, t)| t.bias_types()).collect();
    let mut header = vec!["Dataset".to_string(), "Bias".to_string()];
    header.extend(models.iter().map(|m| m.to_string()));
    let mut rows = Vec::new();
    for b in &biases {
        for (name, t) in tables {
            if !t.bias_types().contains(b) {
                continue;
            }
            let mut row = vec![name.clone(), b.to_string()];
            row.extend(models.iter().map(|m| {
                t.get(b, m)
                    .map(format_percent)
                    .unwrap_or_else(|| ABSENT.into())
            }));
            rows.push(row);
        }
    }
    Ok(Grid {
        caption: format!(
            "Failed test cases per model, % (threshold > {})",
            format_threshold(threshold)
        ),
        header,
        rows,
    }
    .render(format))
}

/// Table-3 style corpus statistics, one column per dataset.
pub fn render_diversity_table(
    reports: &[(String, DiversityReport)],
    format: TableFormat,
) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Empty("no diversity reports".into()));
    }
    let mut header = vec!["Statistic".to_string()];
    header.extend(reports.iter().map(|(n, _)| n.clone()));
    type Field = fn(&DiversityReport) -> String;
    let fields: [(&str, Field); 9] = [
        ("unique test cases", |r| r.unique_test_cases.to_string()),
        ("sentences", |r| r.total_sentences.to_string()),
        ("unique tokens", |r| r.unique_tokens.to_string()),
        ("mean sentence length", |r| format!("{:.1}", r.mean_sentence_length_chars)),
        ("mean words per sentence", |r| format!("{:.2}", r.mean_words_per_sentence)),
        ("mean word length", |r| format!("{:.2}", r.mean_word_length)),
        ("identity terms", |r| r.identity_term_count.to_string()),
        ("concept terms", |r| r.concept_term_count.to_string()),
        ("S-unique", |r| {
            r.s_unique.map(|s| s.to_string()).unwrap_or_else(|| ABSENT.into())
        }),
    ];
    let rows = fields
        .iter()
        .map(|(label, f)| {
            let mut row = vec![label.to_string()];
            row.extend(reports.iter().map(|(_, r)| f(r)));
            row
        })
        .collect();
    Ok(Grid {
        caption: "Corpus statistics".into(),
        header,
        rows,
    }
    .render(format))
}
