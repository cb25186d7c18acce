use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsd_cli::bench::{emit_bench, run_bench, BenchArgs, BENCH_SCHEMA};
use qsd_cli::dilate::{run_dilate, DilateArgs};
use qsd_cli::files::to_canonical_json;
use qsd_cli::simulate::{emit_simulate, run_simulate, SimulateArgs};
use qsd_cli::solve::{run_solve, SolveArgs};
use qsd_cli::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "qsd",
    version,
    about = "Quantum state discrimination: optimize, dilate, simulate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a discrimination scheme and write the optimal POVM.
    Solve(SolveArgs),
    /// Build a Naimark dilation isometry for a POVM.
    Dilate(DilateArgs),
    /// Simulate the dilated measurement on noisy input states.
    Simulate(SimulateArgs),
    /// Time solve, rank-1 decomposition, and isometry construction.
    Bench(BenchArgs),
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Solve(args) => Ok(to_canonical_json(&run_solve(&args)?)),
        Command::Dilate(args) => Ok(to_canonical_json(&run_dilate(&args)?)),
        Command::Simulate(args) => emit_simulate(&args, &run_simulate(&args)?),
        Command::Bench(args) if args.print_schema => Ok(BENCH_SCHEMA.to_string()),
        Command::Bench(args) => emit_bench(&args, &run_bench(&args)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("qsd: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
