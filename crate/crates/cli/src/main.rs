//! `sticky-seq`: run experiments and inspect problem instances from a JSON
//! configuration.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 failed check or
//! runtime invariant, 3 resource cap exceeded, 4 any other error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sticky_seq_core::harness::{cover_bound_report, tstar_report, worker_count, WORKERS_ENV};
use sticky_seq_core::{regularity_check, run_experiment, write_outputs, Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sticky-seq", version, about = "Sticky-sequence Track-and-Stop experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (rule, delta) cell and write summary.csv, trials.csv and metadata.json.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check ball regularity and identifiability without running trials.
    Check { config: PathBuf },
    /// Print the characteristic time, oracle weights and easiest answers.
    Tstar { config: PathBuf },
    /// Print the covering bound on the characteristic time at radius `rho`.
    CoverBound {
        config: PathBuf,
        #[arg(long)]
        rho: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => 1,
        Error::Invariant(_) => 2,
        Error::ResourceCap(_) => 3,
        _ => 4,
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        e => e,
    })
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), Error> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn execute(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            eprintln!(
                "running {} cells x {} trials on {} workers (set {WORKERS_ENV} to change)",
                cfg.rules.len() * cfg.deltas.len(),
                cfg.trials,
                worker_count()
            );
            let output = run_experiment(&cfg)?;
            write_outputs(&cfg, &output, &dir)?;
            for c in &output.cells {
                emit(&format!(
                    "{:<13} delta={:<8} mean_tau={:>10.1} ratio/T*={:>7.3} error={:.4} capped={}",
                    c.rule.name(), c.delta, c.mean_tau, c.ratio_over_tstar, c.error_rate, c.capped
                ))?;
            }
            emit(&format!("wrote {}", dir.display()))?;
            let violations = output.tracking_violations();
            if violations > 0 {
                eprintln!("tracking invariant violated {violations} times");
                return Ok(2);
            }
            Ok(0)
        }
        Command::Check { config } => {
            let cfg = load(&config)?;
            let report = regularity_check(&cfg)?;
            print_json(&report)?;
            Ok(if report.pass { 0 } else { 2 })
        }
        Command::Tstar { config } => {
            let cfg = load(&config)?;
            print_json(&tstar_report(&cfg)?)?;
            Ok(0)
        }
        Command::CoverBound { config, rho } => {
            let cfg = load(&config)?;
            print_json(&cover_bound_report(&cfg, rho)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
