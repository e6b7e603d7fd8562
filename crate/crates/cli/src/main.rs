//! `longtail` command-line tool.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 reference to an
//! unknown entity, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(
    name = "longtail",
    version,
    about = "Local music recommendation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify local artists and write per-city summary statistics.
    Localize(LocalizeArgs),
    /// Run the restricted-candidate cross-evaluation and write reports.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset with planted local structure.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    playlists: PathBuf,
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    cities: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Restrict to these cities (repeatable). Defaults to every city.
    #[arg(long = "city")]
    city: Vec<String>,
}

#[derive(Debug, Args)]
struct LocalizeArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated models: iin, als, bpr, random, popularity.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also train on the non-local halves of the held-out playlists.
    #[arg(long)]
    include_nonlocal_in_train: bool,
    /// TOML file with model hyperparameters and run defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for saved factor models, reused across runs.
    #[arg(long)]
    model_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    playlists: Option<usize>,
    /// Number of non-local tracks.
    #[arg(long)]
    tracks: Option<usize>,
    #[arg(long)]
    cities: Option<usize>,
    #[arg(long)]
    local_artists: Option<usize>,
    #[arg(long)]
    target_sparsity: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with every generator parameter; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LONGTAIL_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Localize(args) => commands::localize(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
