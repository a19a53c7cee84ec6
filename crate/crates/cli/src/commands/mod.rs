mod curate;
mod evaluate;
mod generate;
mod serve;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::{Cli, Command};
use crate::error::{CliError, Result};
use crate::meta::{beside, CommandMeta};

/// Runs one subcommand and writes its metadata file, whether it succeeded
/// or not.
pub async fn run(cli: Cli) -> Result<()> {
    let name = cli.command.name();
    let meta_path = cli.metadata.clone().unwrap_or_else(|| match cli.command.primary_output() {
        Some(out) => beside(out),
        None => PathBuf::from(format!("biascase-{name}.meta.json")),
    });
    let mut meta = CommandMeta::new(name);
    let result = dispatch(cli.command, &mut meta, &meta_path).await;
    if !meta.written_by_command {
        meta.finish(result.as_ref().err());
        if let Err(e) = meta.write(&meta_path) {
            log::error!("{e}");
            return result.and(Err(e));
        }
    }
    result
}

async fn dispatch(command: Command, meta: &mut CommandMeta, meta_path: &Path) -> Result<()> {
    match command {
        Command::Generate(a) => generate::generate(a, meta, meta_path).await,
        Command::Bts(a) => generate::bts(a, meta).await,
        Command::Etsg(a) => generate::etsg(a, meta).await,
        Command::Counterfactual(a) => generate::counterfactual(a, meta).await,
        Command::Augment(a) => generate::augment(a, meta).await,
        Command::RecordFixtures(a) => generate::record_fixtures(a, meta),
        Command::Filter(a) => curate::filter(a, meta),
        Command::Import(a) => curate::import(a, meta),
        Command::Evaluate(a) => evaluate::evaluate(a, meta).await,
        Command::Diversity(a) => evaluate::diversity(a, meta),
        Command::Report(a) => evaluate::report(a, meta),
        Command::ReviewServe(a) => serve::review_serve(a, meta).await,
    }
}

/// Output files go into existing directories only; checked before any
/// request is made.
fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn ensure_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("input file {} does not exist", path.display())))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body)
        .map_err(|e| CliError::run("io", format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::run("io", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::run("json", format!("{}: {e}", path.display())))
}

/// One machine-readable summary line on stdout.
fn summary(value: serde_json::Value) {
    println!("{value}");
}
