use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use glueshadow::config::ExperimentConfig;
use glueshadow::output::SUMMARY_HEADER;
use glueshadow::runner::{run, RunStatus};

/// Gluing and shadowing experiments driven by a config file.
#[derive(Debug, Parser)]
#[command(name = "glueshadow", version)]
struct Cli {
    /// Experiment config (`block.key = value` lines).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Overrides `perturbation.seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory; overrides `run.output`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(RunStatus::Usage.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut cfg = match ExperimentConfig::from_file(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(RunStatus::Usage.code() as u8);
        }
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match run(&cfg, &out) {
        Ok(outcome) => {
            if let Some(e) = &outcome.error {
                eprintln!("{e}");
            }
            if !cli.quiet {
                println!("{SUMMARY_HEADER}");
                println!("{}", outcome.summary.to_csv_line());
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(RunStatus::of_error(&e).code() as u8)
        }
    }
}
