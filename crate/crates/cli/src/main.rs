use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwmg::benchmark::Method;

mod commands;
mod config;
mod error;
mod output;
mod svg;

use commands::Context;
use config::RunConfig;
use error::CliResult;

/// Learn frame relevance from few demonstrations, generate trajectories in
/// new situations and benchmark against TP-GMM.
#[derive(Parser)]
#[command(name = "fwmg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Comma-separated subset of frame-weighted, tpgmm, augmented-tpgmm.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Vec<Method>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write scripted training and validation demonstrations.
    GenDataset,
    /// Optimize the relevance profile on the training demonstrations.
    FitWeights,
    /// Generate trajectories in new situations with a fitted profile.
    Generate,
    /// Add frame-weighted synthetic demonstrations to the training set.
    Augment,
    /// Fit a TP-GMM on the training demonstrations.
    TpgmmTrain,
    /// Compare methods and write tables and figures.
    Evaluate,
    /// Run the demonstration-count and augmentation sweeps.
    Sweep,
    /// Re-render figures from existing reports.
    Plot,
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let config = RunConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    let methods = if cli.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        cli.methods
    };
    let ctx = Context {
        config,
        out: cli.out,
        methods,
    };
    match cli.command {
        Command::GenDataset => commands::gen_dataset(&ctx),
        Command::FitWeights => commands::fit_weights(&ctx),
        Command::Generate => commands::generate_cmd(&ctx),
        Command::Augment => commands::augment(&ctx),
        Command::TpgmmTrain => commands::tpgmm_train(&ctx),
        Command::Evaluate => commands::evaluate(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Plot => commands::plot(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
