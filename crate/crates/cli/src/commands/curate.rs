use std::path::Path;

use biascase_core::dataset::{
    import_biastestgpt, import_crows_pairs, import_eec, load_testset, save_testset,
    BiasTestGptColumns, CrowsColumns, EecColumns,
};
use serde::de::DeserializeOwned;
use serde_json::json;

use super::{ensure_file, ensure_parent, summary, write_json};
use crate::args::{FilterArgs, ImportArgs, ImportSource};
use crate::error::{CliError, Result};
use crate::meta::CommandMeta;

pub fn filter(a: FilterArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.testset)?;
    ensure_parent(&a.out)?;
    let report_path = a.report.clone().unwrap_or_else(|| a.out.with_extension("report.json"));
    ensure_parent(&report_path)?;
    meta.input("testset", &a.testset)?;
    let set = load_testset(&a.testset)?;
    let records = match &a.annotations {
        Some(p) => {
            ensure_file(p)?;
            meta.input("annotations", p)?;
            biascase_review::read_log(p)?
        }
        None => Vec::new(),
    };
    let (curated, report, outcome) = biascase_core::filter::export_final(&set, &records, a.policy)?;
    for id in &outcome.unknown_case_ids {
        let msg = format!("annotations name unknown case {id}");
        log::warn!("{msg}");
        meta.warnings.push(msg);
    }
    meta.settings(json!({"policy": a.policy}));
    meta.count("cases_in", set.len());
    meta.count("annotations", records.len());
    meta.count("rejected_by_annotators", outcome.rejected);
    meta.count("cases_out", curated.len());
    meta.output("testset", &a.out);
    meta.output("report", &report_path);
    save_testset(&curated, &a.out)?;
    write_json(&report_path, &report)?;
    summary(json!({
        "command": "filter",
        "out": a.out,
        "report": report_path,
        "active": curated.len(),
        "rejected_by_annotators": outcome.rejected,
    }));
    Ok(())
}

fn columns<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::usage(format!("column map {}: {e}", path.display())))
}

pub fn import(a: ImportArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.input)?;
    ensure_parent(&a.out)?;
    meta.input("source", &a.input)?;
    let cols = a.columns.as_deref();
    let (mut set, report) = match a.source {
        ImportSource::Eec => {
            let c: EecColumns = columns(cols)?;
            meta.settings(json!({"source": "eec", "axis": a.axis, "columns": c}));
            import_eec(&a.input, a.axis, &c)?
        }
        ImportSource::Crows => {
            let c: CrowsColumns = columns(cols)?;
            meta.settings(json!({"source": "crows-pairs", "columns": c}));
            import_crows_pairs(&a.input, &c)?
        }
        ImportSource::Biastestgpt => {
            let c: BiasTestGptColumns = columns(cols)?;
            meta.settings(json!({"source": "biastestgpt", "columns": c}));
            import_biastestgpt(&a.input, &c)?
        }
    };
    if let Some(name) = a.name {
        set.name = name;
    }
    meta.count("rows_read", report.rows_read);
    meta.count("rows_paired", report.rows_paired);
    meta.count("cases_produced", report.cases_produced);
    meta.count("duplicates_removed", report.duplicates_removed);
    meta.count("rows_skipped", report.skipped_total());
    meta.warnings = report.warnings.clone();
    meta.output("testset", &a.out);
    save_testset(&set, &a.out)?;
    summary(json!({"command": "import", "out": a.out, "report": report}));
    Ok(())
}
