//! `mirnet`: ingest PTB records, train, cross-validate and predict.
//!
//! Exit status: 0 success, 1 I/O, 2 configuration or usage, 3 malformed
//! input (WFDB, weight or dataset files), 4 empty data, 5 internal error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {1}", path = .0.display())]
    Io(PathBuf, #[source] std::io::Error),
    #[error("input: {0}")]
    Input(String),
}

#[derive(Parser, Debug)]
#[command(name = "mirnet", version, about = "12-lead ECG myocardial infarction localization")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// `key = value` file; flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for splits, initialization and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Number of cross-validation splits.
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, label, decimate and segment the records of an index file into a dataset.
    Ingest {
        /// Index file listing record paths (e.g. `patient001/s0010_re`).
        #[arg(long)]
        index: Option<PathBuf>,
        /// Output dataset (default: <out-dir>/dataset.mids).
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Train one model on one split and save its weights and history.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Which split to train on.
        #[arg(long)]
        fold: Option<usize>,
        /// Output weights (default: <out-dir>/weights.mirn).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Subject-disjoint cross-validation with per-fold confusion matrices.
    Xval {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Per-segment class probabilities as CSV on stdout.
    Predict {
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, conflicts_with = "record")]
        dataset: Option<PathBuf>,
        /// A single WFDB record (path with or without `.hea`).
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let g = &self.global;
        let mut o = Overrides {
            seed: g.seed,
            epochs: g.epochs,
            batch_size: g.batch_size,
            lr: g.lr,
            out_dir: g.out_dir.clone(),
            folds: g.folds,
            ..Overrides::default()
        };
        match &self.command {
            Command::Ingest { index, dataset } => {
                o.index = index.clone();
                o.dataset = dataset.clone();
            }
            Command::Train { dataset, fold, weights } => {
                o.dataset = dataset.clone();
                o.fold = *fold;
                o.weights = weights.clone();
            }
            Command::Xval { dataset } => o.dataset = dataset.clone(),
            Command::Predict { weights, dataset, record } => {
                o.weights = weights.clone();
                o.dataset = dataset.clone();
                o.record = record.clone();
            }
        }
        o
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use mirnet_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Config(_) => 2,
                CliError::Io(..) => 1,
                CliError::Input(_) => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } => 1,
                E::Config(_) => 2,
                E::Wfdb(_) | E::Format(_) => 3,
                E::EmptyData(_) => 4,
                E::Shape(_) | E::InputTooShort { .. } | E::Contract(_) => 5,
            };
        }
        if cause.is::<std::io::Error>() {
            return 1;
        }
    }
    5
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(cli.global.config.as_deref(), cli.overrides())?;
    log::debug!("config {}", cfg.echo());
    match cli.command {
        Command::Ingest { .. } => commands::ingest(&cfg),
        Command::Train { .. } => commands::train(&cfg),
        Command::Xval { .. } => commands::xval(&cfg),
        Command::Predict { .. } => commands::predict(&cfg, &mut std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
