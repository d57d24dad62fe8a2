use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod manifest;

use config::WireArgs;

/// Corpus preparation and evaluation for grounded dialog.
#[derive(Debug, Parser)]
#[command(name = "dialeval", version, about)]
pub struct Cli {
    /// TOML key-value config; flags override its keys.
    #[arg(long, global = true, env = "DIALEVAL_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw dataset into a corpus file and validate it.
    Ingest(IngestArgs),
    /// Drop dialogs that break a safety policy.
    Filter(FilterArgs),
    /// Draw a seeded few-shot subset of dialogs.
    Sample(SampleArgs),
    /// Flatten every instance into one training line.
    Serialize(SerializeArgs),
    /// Request a response for every instance from a generation service.
    Generate(GenerateArgs),
    /// Score system outputs; optionally compare against a baseline.
    Evaluate(EvaluateArgs),
    /// Build blinded pairwise comparison tasks for human raters.
    BuildTasks(BuildTasksArgs),
    /// Agreement, win/tie/loss and metric correlation from human ratings.
    Analyze(AnalyzeArgs),
    /// Print the Combined score for given Inform, Success and BLEU (percent).
    Combined(CombinedArgs),
    /// Print comparison tables for saved reports.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
pub struct IngestArgs {
    /// generic, taskoriented, knowledge or qa.
    #[arg(long)]
    pub adapter: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file overriding source field names.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// TOML filter policy applied after ingestion.
    #[arg(long)]
    pub filter: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Dialogs to draw [default: 50].
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SerializeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub wire: WireArgs,
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, env = "DIALEVAL_ENDPOINT")]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// [default: 5]
    #[arg(long)]
    pub beam_size: Option<u32>,
    /// [default: 128]
    #[arg(long)]
    pub max_new_tokens: Option<u32>,
    /// Per-request timeout [default: 60].
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    /// [default: 8]
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Retries for transient failures [default: 3].
    #[arg(long)]
    pub retries: Option<u32>,
    #[command(flatten)]
    pub wire: WireArgs,
}

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub outputs: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Entity database for Inform/Success.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Neural scorer endpoint; skipped with a warning when unreachable.
    #[arg(long, env = "DIALEVAL_SCORER")]
    pub scorer: Option<String>,
    /// Metric name for scorer results [default: neural].
    #[arg(long)]
    pub scorer_metric: Option<String>,
    /// Outputs of a second system to test against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value = "system")]
    pub name: String,
    #[arg(long, default_value = "baseline")]
    pub baseline_name: String,
    /// Bootstrap resamples [default: 1000].
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Bootstrap seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scorer request timeout [default: 60].
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct BuildTasksArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub system_a: PathBuf,
    #[arg(long)]
    pub system_b: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// Unblinding keys from build-tasks; needed for win/tie/loss and
    /// correlation.
    #[arg(long)]
    pub keys: Option<PathBuf>,
    /// Metric report of system A, correlated with human ratings.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "ratings")]
    pub dataset: String,
    #[arg(long, default_value = "A")]
    pub name_a: String,
    #[arg(long, default_value = "B")]
    pub name_b: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CombinedArgs {
    #[arg(long)]
    pub inform: f64,
    #[arg(long)]
    pub success: f64,
    #[arg(long)]
    pub bleu: f64,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// `NAME=PATH` pairs of saved report.json files.
    #[arg(required = true)]
    pub reports: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
