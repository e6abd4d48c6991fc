//! `spinmoments` command-line front end.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BoundArgs, BudgetArgs, CliError, CriterionArgs, MomentArgs, ScanArgs, StateArgs};

pub const THREADS_ENV: &str = "SPINMOMENTS_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "spinmoments",
    version,
    about = "Collective randomized measurement toolkit"
)]
struct Cli {
    /// Worker threads (0 = all cores); SPINMOMENTS_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a state and write it as JSON.
    State(StateArgs),
    /// Estimate a random moment of a state.
    Moment(MomentArgs),
    /// Evaluate an entanglement criterion on a state.
    Criterion(CriterionArgs),
    /// Region scan of the mixed phased-Dicke family (CSV).
    Scan(ScanArgs),
    /// Numerical separability bound of the antisymmetric observable.
    Bound(BoundArgs),
    /// Measurement budgets versus shots per setting (CSV).
    Budget(BudgetArgs),
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            CliError::Input(format!(
                "{THREADS_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        _ => Ok(flag.unwrap_or(0)),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = resolve_threads(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Compute(format!("thread pool: {e}")))?;
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::State(a) => commands::state(a, threads),
        Command::Moment(a) => commands::moment(a, threads),
        Command::Criterion(a) => commands::criterion(a, threads),
        Command::Scan(a) => commands::scan(a, threads),
        Command::Bound(a) => commands::bound(a, threads),
        Command::Budget(a) => commands::budget(a, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
