use std::process::ExitCode;

use ccg_cli::config::{CommonArgs, RunConfig};
use ccg_cli::{cmd_simulate, cmd_solve, cmd_table, cmd_verify, CliError};
use clap::{Parser, Subcommand};

/// Values of the mod-d communication game under classical, quantum and
/// entanglement-assisted resources.
#[derive(Parser)]
#[command(name = "ccg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One row per d with every column (default d = 2..8).
    Table(CommonArgs),
    /// One engine for one d.
    Solve(CommonArgs),
    /// Monte Carlo estimate of a strategy file's value.
    Simulate(CommonArgs),
    /// Cross-module invariant suite; exits 1 on any failure.
    Verify(CommonArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Table(a) => cmd_table(&RunConfig::resolve(&a)?).map(drop),
        Command::Solve(a) => cmd_solve(&RunConfig::resolve(&a)?).map(drop),
        Command::Simulate(a) => cmd_simulate(&RunConfig::resolve(&a)?).map(drop),
        Command::Verify(a) => cmd_verify(&RunConfig::resolve(&a)?).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors by itself.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
