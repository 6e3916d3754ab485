//! `survmine`: registry preprocessing, labeling and survivability experiments.

mod commands;
mod settings;
mod staging;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use survmine::Error;

use settings::Switch;

#[derive(Parser)]
#[command(
    name = "survmine",
    version,
    about = "Lung-cancer survivability mining toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fixed-width cohort with its ground truth.
    Synth(SynthArgs),
    /// Parse raw files and run the four preprocessing phases.
    Preprocess(PreprocessArgs),
    /// Assign survivability classes to codified records.
    Label(LabelArgs),
    /// Class balance, median survival per year and value frequencies.
    Stats(StatsArgs),
    /// Train one classifier on a labeled CSV.
    Train(TrainArgs),
    /// Score a saved model on a labeled CSV.
    Evaluate(EvaluateArgs),
    /// Preprocess, label and run every train/target split.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Generator settings as key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one generator setting.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    records: Option<usize>,
}

#[derive(Args, Default)]
pub struct PrepOpts {
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Keep diagnoses from 1988-1999 (on) or 1988-2003 (off).
    #[arg(long, value_name = "on|off")]
    study_window: Option<Switch>,
}

#[derive(Args, Default)]
pub struct LabelOpts {
    /// five-year or short-long.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    ts_months: Option<u32>,
    #[arg(long, value_name = "on|off")]
    study_window: Option<Switch>,
}

#[derive(Args, Default)]
pub struct ModelOpts {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    min_leaf: Option<usize>,
}

#[derive(Args)]
pub struct PreprocessArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    prep: PrepOpts,
}

#[derive(Args)]
pub struct LabelArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    label: LabelOpts,
}

#[derive(Args)]
pub struct StatsArgs {
    /// Codified records from `preprocess`.
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    /// Labeled CSV; labels are derived from the records when absent.
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// text or tsv.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    drop_fraction: Option<f64>,
    #[command(flatten)]
    label: LabelOpts,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// naive_bayes or j48.
    #[arg(long, default_value = "naive_bayes")]
    classifier: String,
    /// Train only on diagnosis years first-last.
    #[arg(long)]
    years: Option<String>,
    #[command(flatten)]
    model: ModelOpts,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluate only instances diagnosed in this year.
    #[arg(long)]
    year: Option<i32>,
    /// Experiment name used in the report.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// name:first-last:target; the three shipped splits when absent.
    #[arg(long)]
    spec: Vec<String>,
    #[command(flatten)]
    prep: PrepOpts,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    ts_months: Option<u32>,
    #[command(flatten)]
    model: ModelOpts,
}

impl ExperimentArgs {
    fn label_opts(&self) -> LabelOpts {
        LabelOpts {
            mode: self.mode.clone(),
            ts_months: self.ts_months,
            study_window: self.prep.study_window,
        }
    }
}

/// Failure class and exit status for an error chain.
fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) | Error::AgeOutOfRange(_) => ("bad config", 2),
                Error::Empty(_) | Error::EmptyPartition(_) => ("empty partition", 4),
                Error::Io(_) => ("i/o failure", 1),
                _ => ("parse failure", 3),
            };
        }
    }
    ("i/o failure", 1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Label(a) => commands::label(a),
        Command::Stats(a) => commands::stats(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Experiment(a) => {
            let label = a.label_opts();
            commands::experiment(a, label)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, code) = classify(&e);
            eprintln!("survmine: {class}: {e:#}");
            ExitCode::from(code)
        }
    }
}
