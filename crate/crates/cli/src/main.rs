//! `geo-uio`: synthesize, simulate and verify unknown-input observers from
//! a JSON project configuration.

mod commands;
mod config;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use commands::{ExitKind, Failure};

#[derive(Debug, Parser)]
#[command(name = "geo-uio", version, about = "Geometric unknown-input observer synthesis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Project configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomized verification battery.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Number of randomized verification trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the observer(s) and write report.json.
    Synth,
    /// Synthesize, simulate and write the trajectory CSV, plot data and report.
    Simulate,
    /// Run residual checks for a config and/or the randomized existence-test battery.
    Verify,
    /// Run a built-in example end to end: `centralized` or `distributed`.
    Reproduce { which: String },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let default_out = PathBuf::from("out");
    let out = cli.out.as_deref();
    match cli.command {
        Command::Synth => commands::cmd_synth(cli.config.as_deref(), out.unwrap_or(&default_out)),
        Command::Simulate => commands::cmd_simulate(cli.config.as_deref(), out.unwrap_or(&default_out)),
        Command::Verify => commands::cmd_verify(cli.config.as_deref(), out, cli.trials, cli.seed),
        Command::Reproduce { which } => commands::cmd_reproduce(&which, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(ExitKind::Config as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            if failure.kind == ExitKind::Config {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(failure.code())
        }
    }
}
