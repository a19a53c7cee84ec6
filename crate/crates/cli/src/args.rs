use std::net::SocketAddr;
use std::path::PathBuf;

use biascase_core::dataset::EecAxis;
use biascase_core::filter::RejectPolicy;
use biascase_core::report::TableFormat;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::settings::{GenerationLayer, ProviderLayer};

#[derive(Debug, Parser)]
#[command(name = "biascase", version, about = "Counterfactual bias test generation and evaluation")]
pub struct Cli {
    /// Where to write this run's metadata. Defaults to `<output>.meta.json`.
    #[arg(long, global = true, value_name = "PATH")]
    pub metadata: Option<PathBuf>,

    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: concepts, sentences, counterfactuals and augmentation.
    Generate(GenerateArgs),
    /// Concept sampling only; writes a triplets file.
    Bts(BtsArgs),
    /// Sentence generation from a triplets file.
    Etsg(EtsgArgs),
    /// Counterfactual tuples from a sentences file.
    Counterfactual(CounterfactualArgs),
    /// Lexical, syntactic and semantic augmentation of a test set.
    Augment(AugmentArgs),
    /// Applies annotations and writes the curated set with a filter report.
    Filter(FilterArgs),
    /// Converts an external benchmark into a test set.
    Import(ImportArgs),
    /// Scores a test set with the configured models and writes verdicts.
    Evaluate(EvaluateArgs),
    /// Corpus statistics for one or more test sets.
    Diversity(DiversityArgs),
    /// Probability and failure-rate tables from verdict files.
    Report(ReportArgs),
    /// Runs the annotation service.
    ReviewServe(ReviewServeArgs),
    /// Builds a playback cassette from a fixture script.
    RecordFixtures(RecordFixturesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Bts(_) => "bts",
            Command::Etsg(_) => "etsg",
            Command::Counterfactual(_) => "counterfactual",
            Command::Augment(_) => "augment",
            Command::Filter(_) => "filter",
            Command::Import(_) => "import",
            Command::Evaluate(_) => "evaluate",
            Command::Diversity(_) => "diversity",
            Command::Report(_) => "report",
            Command::ReviewServe(_) => "review-serve",
            Command::RecordFixtures(_) => "record-fixtures",
        }
    }

    /// The file the metadata is written next to, if the command has one.
    pub fn primary_output(&self) -> Option<&PathBuf> {
        match self {
            Command::Generate(a) => Some(&a.out),
            Command::Bts(a) => Some(&a.out),
            Command::Etsg(a) => Some(&a.out),
            Command::Counterfactual(a) => Some(&a.out),
            Command::Augment(a) => Some(&a.out),
            Command::Filter(a) => Some(&a.out),
            Command::Import(a) => Some(&a.out),
            Command::Evaluate(a) => Some(&a.out),
            Command::Diversity(a) => a.out.as_ref(),
            Command::Report(a) => a.out.as_ref(),
            Command::ReviewServe(a) => Some(&a.annotations),
            Command::RecordFixtures(a) => Some(&a.out),
        }
    }
}

/// Generator settings shared by the generation commands.
#[derive(Debug, Args, Clone)]
pub struct GenFlags {
    /// TOML file with `[provider]` and `[generation]` tables.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// live, record:<cassette> or playback:<cassette>.
    #[arg(long, value_name = "MODE")]
    pub provider: Option<String>,

    #[arg(long)]
    pub model: Option<String>,

    #[arg(long, value_name = "URL")]
    pub base_url: Option<String>,

    #[arg(long)]
    pub temperature: Option<f64>,

    /// Maximum concurrent generator requests.
    #[arg(long)]
    pub parallelism: Option<usize>,

    /// Name of the environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,

    /// Bias type, e.g. gender.
    #[arg(long)]
    pub bias: Option<String>,

    /// Comma-separated identity terms, e.g. he,she.
    #[arg(long, value_delimiter = ',')]
    pub terms: Option<Vec<String>>,

    /// Topics requested per concept-sampling call.
    #[arg(long)]
    pub topics: Option<usize>,

    /// Concept-sampling repeats.
    #[arg(long)]
    pub repeats: Option<usize>,

    /// Sentences per concept.
    #[arg(long)]
    pub per_concept: Option<usize>,

    #[arg(long)]
    pub no_lda: bool,
    #[arg(long)]
    pub no_syda: bool,
    #[arg(long)]
    pub no_seda: bool,

    #[arg(long)]
    pub run_id: Option<String>,

    /// Directory of `<kind>.prompt` files overriding the builtin prompts.
    #[arg(long, value_name = "DIR")]
    pub prompts_dir: Option<PathBuf>,
}

impl GenFlags {
    pub fn provider_layer(&self) -> ProviderLayer {
        ProviderLayer {
            source: self.provider.clone(),
            base_url: self.base_url.clone(),
            model_name: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            temperature: self.temperature,
            max_retries: None,
            request_timeout: None,
            retry_backoff_ms: None,
            parallelism: self.parallelism,
        }
    }

    pub fn generation_layer(&self) -> GenerationLayer {
        GenerationLayer {
            bias_type: self.bias.clone(),
            identity_terms: self.terms.clone(),
            topics_per_bts_call: self.topics,
            bts_repeats: self.repeats,
            sentences_per_concept: self.per_concept,
            lda: self.no_lda.then_some(false),
            syda: self.no_syda.then_some(false),
            seda: self.no_seda.then_some(false),
            run_id: self.run_id.clone(),
            prompts_dir: self.prompts_dir.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Output test set (JSON lines).
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BtsArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Output triplets file (JSON).
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EtsgArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Triplets file written by `bts`.
    #[arg(long)]
    pub triplets: PathBuf,
    /// Output sentences file (JSON).
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CounterfactualArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Sentences file written by `etsg`.
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    #[arg(long)]
    pub testset: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub testset: PathBuf,
    /// Annotation log written by the review service.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, default_value = "any_reject", value_parser = parse_policy)]
    pub policy: RejectPolicy,
    /// Curated set: ACTIVE cases only.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Filter report (JSON). Defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImportSource {
    Eec,
    Crows,
    Biastestgpt,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(value_enum)]
    pub source: ImportSource,
    /// The benchmark's CSV/TSV/JSONL file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// EEC pairing axis.
    #[arg(long, default_value = "gender", value_parser = parse_axis)]
    pub axis: EecAxis,
    /// TOML table mapping logical column names to the file's headers.
    #[arg(long, value_name = "PATH")]
    pub columns: Option<PathBuf>,
    /// Name of the produced set. Defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub testset: PathBuf,
    /// TOML file of `[[scorer]]` tables.
    #[arg(long)]
    pub scorers: PathBuf,
    /// Score-difference threshold(s), comma-separated. Scoring happens once.
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    pub theta: Vec<f64>,
    /// Verdict file (JSON).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the failure-rate table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    pub format: TableFormat,
    /// Name for the dataset column. Defaults to the test set name.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    /// One or more test sets; each becomes a column.
    #[arg(long = "testset", required = true, num_args = 1..)]
    pub testsets: Vec<PathBuf>,
    /// Skip the syntax-pattern count.
    #[arg(long)]
    pub no_syntax: bool,
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    pub format: TableFormat,
    /// Also write the reports as JSON.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Verdict files written by `evaluate`; each becomes a dataset column.
    #[arg(long = "verdicts", required = true, num_args = 1..)]
    pub verdicts: Vec<PathBuf>,
    /// Re-threshold every matrix at this value (no lower than the one it was computed at).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    pub format: TableFormat,
    /// Write the tables here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReviewServeArgs {
    #[arg(long)]
    pub testset: PathBuf,
    /// Append-only annotation log; created if missing.
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Built review UI to serve at /.
    #[arg(long, value_name = "DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecordFixturesArgs {
    /// Fixture script (JSON).
    #[arg(long)]
    pub script: PathBuf,
    /// New cassette; must not exist yet.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value = "gpt-3.5-turbo")]
    pub model: String,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, value_name = "DIR")]
    pub prompts_dir: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<RejectPolicy, String> {
    s.parse().map_err(|e: biascase_core::Error| e.to_string())
}

fn parse_axis(s: &str) -> Result<EecAxis, String> {
    s.parse().map_err(|e: biascase_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: biascase_core::Error| e.to_string())
}
