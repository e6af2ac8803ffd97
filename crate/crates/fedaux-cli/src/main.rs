use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fedaux::error::{Error, Result};
use fedaux_cli::commands::{cmd_partition, cmd_report, cmd_train};
use fedaux_cli::config::ExperimentConfig;
use fedaux_cli::exit_code;

#[derive(Parser)]
#[command(
    name = "fedaux",
    about = "Deterministic federated multi-task learning simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to ./runs)
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the station partition manifest and print shard histograms
    Partition {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the configured baselines and store metrics, ledger, and params
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of the config's baselines
        #[arg(long, value_delimiter = ',')]
        baselines: Option<Vec<String>>,
        /// Run baselines in parallel (outputs are identical either way)
        #[arg(long)]
        parallel: bool,
    },
    /// Rebuild the comparison report from a finished run directory
    Report {
        /// Run directory written by `train`
        #[arg(long)]
        out: PathBuf,
        /// Override target accuracies, e.g. service=0.8,duration=0.75
        #[arg(long, value_delimiter = ',')]
        kappa: Option<Vec<String>>,
    },
}

fn parse_kappa(pairs: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (task, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(format!("--kappa expects task=value, got {:?}", pair)))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::config(format!("bad accuracy {:?} in --kappa", value)))?;
        if !(0.0..1.0).contains(&value) {
            return Err(Error::config(format!(
                "target accuracy {} outside (0, 1)",
                value
            )));
        }
        map.insert(task.to_string(), value);
    }
    Ok(map)
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Partition { common } => {
            let config = ExperimentConfig::load(&common.config)?;
            let seed = common.seed.unwrap_or(config.seed);
            cmd_partition(&config, seed, &common.out)
        }
        Command::Train {
            common,
            baselines,
            parallel,
        } => {
            let config = ExperimentConfig::load(&common.config)?;
            let seed = common.seed.unwrap_or(config.seed);
            cmd_train(&config, seed, &common.out, baselines.as_deref(), parallel)
        }
        Command::Report { out, kappa } => {
            let overrides = match kappa {
                Some(pairs) => parse_kappa(&pairs)?,
                None => BTreeMap::new(),
            };
            cmd_report(&out, &overrides)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err);
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
