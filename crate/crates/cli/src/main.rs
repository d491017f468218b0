//! Traceroute that keeps every probe of a measurement on one flow,
//! plus the campaign, detection, and attribution tooling around it:
//! run traces over simulated (or live) networks, detect loops, cycles,
//! and diamonds in the measurements, and attribute them to causes.

mod analyze;
mod common;
mod report;
mod sim_run;
mod trace;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "flowtrace", version, about = "Flow-pinned traceroute and measurement-artifact analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace the route to one destination and print it.
    Trace(trace::TraceArgs),
    /// Run a deterministic paired measurement campaign over a
    /// simulated network.
    SimRun(sim_run::SimRunArgs),
    /// Detect loops, cycles, and diamonds in a measurement file.
    Analyze(analyze::AnalyzeArgs),
    /// Diff artifact findings between a varying-flow and a
    /// constant-flow measurement of the same destinations.
    Compare(report::CompareArgs),
    /// Attribute artifacts to causes as a percentage table.
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Trace(args) => trace::run(args),
        Command::SimRun(args) => sim_run::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Compare(args) => report::run_compare(args),
        Command::Report(args) => report::run_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("flowtrace: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
