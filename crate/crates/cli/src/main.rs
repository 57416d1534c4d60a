mod commands;
mod config;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Scoring, item analysis, reliability and IRT fitting for multiple-choice
/// response matrices corrected for guessing.
#[derive(Debug, Parser)]
#[command(name = "corrmat", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct OutArg {
    /// Output directory (created if missing).
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a response file into a scored matrix and score vectors.
    Score {
        /// Response CSV: person_id then one column per item with 1, W or `.`.
        input: PathBuf,
        /// ignore, punitive or corrected.
        #[arg(long, default_value = "corrected")]
        scheme: String,
        /// Item bank CSV (item_id,options).
        #[arg(long)]
        items: Option<PathBuf>,
        /// Option count for every item when no item bank is given.
        #[arg(long, default_value_t = 4)]
        options: u32,
        /// Remove all-constant and negative-sum lines before writing.
        #[arg(long)]
        prune: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Item statistics and intercorrelations of a scored matrix.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        prune: bool,
        /// Minimum corrected item-total correlation of a valid item.
        #[arg(long, default_value_t = corrmat::stats::VALIDITY_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Reliability coefficients of a scored matrix.
    Reliability {
        input: PathBuf,
        /// Comma-separated: split-half, kr20, alpha, test-retest.
        #[arg(long, value_delimiter = ',', default_value = "split-half,kr20,alpha")]
        methods: Vec<String>,
        /// Half assignment for split-half: odd-even or first-second.
        #[arg(long, default_value = "odd-even")]
        split: String,
        /// Second administration (scored CSV) for test-retest.
        #[arg(long)]
        retest: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Fit an IRT model by joint maximum likelihood.
    Fit {
        input: PathBuf,
        /// rasch, 2pl-item, 2pl-person or 3param.
        #[arg(long, default_value = "rasch")]
        model: String,
        /// TOML file with fitting options.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        prune: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate true, distorted and corrected matrices and run the recovery experiment.
    Simulate {
        /// TOML file with simulation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
        /// Seed; defaults to the config file, then the CORRMAT_SEED variable, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        options: Option<u32>,
        #[arg(long)]
        guess_rate: Option<f64>,
        /// Also compare Rasch item estimates in every replication.
        #[arg(long)]
        fit_irt: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Merge the outputs of earlier runs into one text summary.
    Report {
        /// Output directories of earlier commands.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Write here instead of the recorded output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse_from(std::iter::once("corrmat".to_string()).chain(args.clone())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli, &args) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
