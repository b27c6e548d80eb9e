use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blackwell_cli::commands;

#[derive(Parser)]
#[command(
    name = "blackwell",
    version,
    about = "Approachability and no-regret simulator for repeated vector-payoff games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with one seed; write a step CSV and a report JSON.
    Run {
        /// Scenario TOML path.
        scenario: PathBuf,
        /// Seed override; defaults to the scenario's first declared seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Step CSV path; the report JSON lands next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every declared seed; write checkpoint quantiles as CSV.
    Sweep {
        /// Scenario TOML path.
        scenario: PathBuf,
        /// Sweep CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize step CSVs as one PASS/FAIL line per run.
    Report {
        /// Step CSV paths produced by `run`.
        paths: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
        } => commands::cmd_run(&scenario, seed, out.as_deref()),
        Command::Sweep { scenario, out } => commands::cmd_sweep(&scenario, out.as_deref()),
        Command::Report { paths } => commands::cmd_report(&paths),
    };
    ExitCode::from(code as u8)
}
