//! `hwpd`: synthesize cohorts, extract features, train, evaluate, fuse and
//! plot-ready ROC tables.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "hwpd", version, about = "Handwriting biomarkers for Parkinson's disease screening")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled synthetic cohort.
    Synth(SynthArgs),
    /// Extract the feature matrix of a dataset.
    Features(FeaturesArgs),
    /// Select meta-parameters on one task and fit a model on all its subjects.
    Train(TrainArgs),
    /// Run the full protocol: optimize on Circle, test per task, fuse.
    Evaluate(EvaluateArgs),
    /// Fuse per-task score files by the mean rule.
    Fuse(FuseArgs),
    /// ROC points and AUC of score files.
    Roc(RocArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Cohort configuration JSON (missing fields take defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Subjects per group as PD,EHC,YHC; overrides the configuration.
    #[arg(long, value_name = "PD,EHC,YHC")]
    counts: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Feature input: a dataset manifest (features extracted on the fly) or a
/// feature matrix written by `features`.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Dataset manifest CSV.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Feature matrix CSV; `feature_manifest.csv` is read from its directory.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Adds the range functional to every per-stroke aggregate.
    #[arg(long)]
    with_range: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value = "yhc-vs-pd")]
    experiment: String,
    #[arg(long, default_value = "svm")]
    classifier: String,
    /// Grid JSON with any of k, c, gamma, mlp, mlp_layout.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: ModelArgs,
    #[arg(long, default_value = "all")]
    features: String,
    #[arg(long, default_value = "Circle")]
    task: String,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: ModelArgs,
    /// Comma-separated feature selections.
    #[arg(long, default_value = "kinematic,nonlinear,neuromotor,all")]
    features: String,
    /// Fewer epochs for quick MLP runs.
    #[arg(long)]
    mlp_epochs: Option<usize>,
}

#[derive(Debug, Args)]
struct FuseArgs {
    /// Score CSV files; fused rows in them are ignored.
    #[arg(long, required = true, num_args = 1..)]
    scores: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RocArgs {
    #[arg(long, required = true, num_args = 1..)]
    scores: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HWPD_LOG", "warn")).format_timestamp(None).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Features(a) => commands::features(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Roc(a) => commands::roc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Data(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(2)
        }
    }
}
