use std::path::PathBuf;
use std::process::ExitCode;

use admlab_cli::runner::{self, Options, RunError, RunSummary};
use clap::{Parser, Subcommand};

/// Pseudo-spectral ADM Boussinesq solver and verification lab.
///
/// Output directories are placed under $ADMLAB_OUTPUT_ROOT when it is set.
#[derive(Parser)]
#[command(name = "admlab", version)]
struct Cli {
    /// Check divergence, zero-mean and Hermitian invariants after every step.
    #[arg(long, global = true)]
    strict_invariants: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration (a family when `orders` is given).
    Run { config: PathBuf },
    /// Run a family of deconvolution orders and write a convergence report.
    Family { config: PathBuf },
    /// Print the deconvolution symbol table and verify its bounds.
    CheckSymbols {
        alpha: f64,
        #[arg(value_name = "N")]
        order: usize,
        modes: usize,
    },
    /// Continue a run from a snapshot.
    Resume { snapshot: PathBuf, config: PathBuf },
}

fn report(summary: &RunSummary) {
    println!(
        "wrote {} ({} steps, t = {})",
        summary.output_dir.display(),
        summary.steps,
        summary.final_time
    );
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let opts = Options {
        strict_invariants: cli.strict_invariants,
    };
    match cli.command {
        Command::Run { config } => report(&runner::run(&runner::load_config(&config)?, opts)?),
        Command::Family { config } => report(&runner::family(&runner::load_config(&config)?, opts)?),
        Command::Resume { snapshot, config } => {
            report(&runner::resume(&snapshot, &runner::load_config(&config)?, opts)?)
        }
        Command::CheckSymbols { alpha, order, modes } => {
            let ok = runner::check_symbols(alpha, order, modes, &mut std::io::stdout().lock())?;
            if !ok {
                return Err(RunError::Numerical("symbol bounds violated".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("admlab: {} error: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
