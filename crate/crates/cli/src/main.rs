//! `greenfn` command line: bases, kernels, propagation, frequency studies,
//! the distribution lab and the validation suite.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "greenfn", version, about = "Retarded and advanced Green's functions from spectral data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Export a mode basis and its completeness report.
    Basis(Opts),
    /// Assemble a kernel on a time window and audit it.
    Kernel(Opts),
    /// Evolve a Gaussian wave packet with the retarded kernel.
    Propagate(Opts),
    /// Field of a switched-on source and of an appearing point charge.
    Field(Opts),
    /// Frequency response, pole inventory and optional convolution check.
    Freq(Opts),
    /// Regularized step and delta families.
    Distcheck(Opts),
    /// Run the acceptance suite.
    Validate(Opts),
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (opts, run): (&Opts, fn(RunConfig) -> anyhow::Result<Outcome>) = match &cli.command {
        Command::Basis(o) => (o, commands::basis),
        Command::Kernel(o) => (o, commands::kernel),
        Command::Propagate(o) => (o, commands::propagate_cmd),
        Command::Field(o) => (o, commands::field),
        Command::Freq(o) => (o, commands::freq),
        Command::Distcheck(o) => (o, commands::distcheck),
        Command::Validate(o) => (o, commands::validate),
    };
    let result = config::resolve(opts.config.as_deref(), &opts.run).and_then(run);
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
