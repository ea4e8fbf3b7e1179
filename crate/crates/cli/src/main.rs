use std::process::ExitCode;

use clap::{Parser, Subcommand};
use virfuse_cli::commands::{self, BpzMultiArgs, FuseArgs, McArgs, OdeArgs, SingularArgs, SolveArgs, VerifyArgs};
use virfuse_cli::{threads_from_env, CliError, Output};

/// Virasoro singular vectors, fusion, BPZ operators and SLE watermelon
/// probabilities.
#[derive(Debug, Parser)]
#[command(name = "virfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Singular vector Δ_{r,s}.
    Singular(SingularArgs),
    /// Fuse Δ_{r,s} with the (2,1) insertion.
    Fuse(FuseArgs),
    /// Compiled ODE D_{n+1} with its Fuchsian report.
    Ode(OdeArgs),
    /// Sector curves f_k(θ) as CSV.
    Solve(SolveArgs),
    /// Monte-Carlo estimate of (f_0, …, f_n).
    Mc(McArgs),
    /// Multi-point BPZ operators and the product-solution check.
    BpzMulti(BpzMultiArgs),
    /// Acceptance suite.
    Verify(VerifyArgs),
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    let threads = threads_from_env()?;
    match &cli.command {
        Command::Singular(a) => commands::singular(a),
        Command::Fuse(a) => commands::fuse_cmd(a),
        Command::Ode(a) => commands::ode(a),
        Command::Solve(a) => commands::solve(a),
        Command::Mc(a) => commands::mc(a, threads),
        Command::BpzMulti(a) => commands::bpz_multi(a),
        Command::Verify(a) => commands::verify_cmd(a, threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            for note in &out.notes {
                eprintln!("{note}");
            }
            match out.failure {
                Some(f) => {
                    eprintln!("error: {f}");
                    ExitCode::from(2)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
