use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfl_core::experiment::{run_experiment, Experiment, ExperimentConfig};
use qfl_core::Error;

/// Run delegated and federated learning experiments over simulated quantum
/// homomorphic encryption.
#[derive(Debug, Parser)]
#[command(name = "qfl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON experiment config; its kind must match the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory (overrides the config and QFL_OUT_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Exact expectations.
    #[arg(long, global = true, conflicts_with = "shots")]
    exact: bool,

    /// Estimate expectations from N shots.
    #[arg(long, global = true, value_name = "N")]
    shots: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Classify random states through the encrypted protocol and compare with plaintext.
    DemoInference,
    /// Train a variational classifier with every expectation delegated.
    TrainDelegated,
    /// Federated training across several clients with independent vaults.
    TrainFederated,
    /// Discrete-logarithm kernel pipeline with a classical client.
    DlpKernel,
    /// Pad-averaging and server-view privacy audits.
    AuditPrivacy,
    /// Communication of the encrypted protocol against the blind-computing model.
    CompareComm,
}

impl Command {
    fn kind(self) -> &'static str {
        match self {
            Command::DemoInference => "demo-inference",
            Command::TrainDelegated => "train-delegated",
            Command::TrainFederated => "train-federated",
            Command::DlpKernel => "dlp-kernel",
            Command::AuditPrivacy => "audit-privacy",
            Command::CompareComm => "compare-comm",
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let kind = cli.command.kind();
    let mut config = match &cli.global.config {
        Some(path) => {
            let c = ExperimentConfig::from_path(path).map_err(|e| match e {
                Error::Io(io) => Error::Config {
                    path: "--config".into(),
                    message: format!("{}: {io}", path.display()),
                },
                other => other,
            })?;
            if c.experiment.kind() != kind {
                return Err(Error::Config {
                    path: "experiment.kind".into(),
                    message: format!("config describes `{}`, subcommand is `{kind}`", c.experiment.kind()),
                });
            }
            c
        }
        None => ExperimentConfig::new(Experiment::default_for(kind)?, 0),
    };
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    if cli.global.exact {
        config.shots = 0;
    }
    if let Some(shots) = cli.global.shots {
        if shots == 0 {
            return Err(Error::Validation("--shots needs a positive count; use --exact".into()));
        }
        config.shots = shots;
    }
    if let Some(out) = &cli.global.out {
        config.out = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = resolve(cli)?;
    let bundle = run_experiment(&config)?;
    let dir = config
        .out
        .clone()
        .or_else(|| std::env::var_os("QFL_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qfl-out").join(cli.command.kind()));
    for path in bundle.write_to(&dir)? {
        eprintln!("wrote {}", path.display());
    }
    println!("{}", serde_json::to_string_pretty(&bundle.summary["results"])?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
