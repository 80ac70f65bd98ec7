//! driftlab: simulate the drift-diffusion system, analyze multiscale
//! seminorms, and certify the amplitude envelope.
//!
//! Exit codes: 0 holding/success, 2 breached, 3 invalid input,
//! 4 numerical failure.

use clap::{Parser, Subcommand};
use driftlab_core::error::Error;
use driftlab_core::{runner, scenario::Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "driftlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for the multiscale scans (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, analyze and certify one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out/run")]
        out: PathBuf,
    },
    /// Decompose dI/dt at the most extremal stored points of a finished run.
    Audit {
        /// Run directory produced by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value = "out/audit")]
        out: PathBuf,
    },
    /// Cross product of `sweep.<key> = v1,v2,...` overrides.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
    },
    /// Calibrate the inequality constants on a seeded random corpus.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out/calibrate")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        // ignore failure when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }

    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::Numerical { .. } | Error::NonFinite { .. } => 4,
        _ => 3,
    }
}

fn load_scenario(path: &PathBuf, seed: Option<u64>) -> Result<Scenario, Error> {
    let mut text = std::fs::read_to_string(path)?;
    if let Some(seed) = seed {
        text.push_str(&format!("\nseed = {seed}\n"));
    }
    Scenario::parse(&text)
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { config, out } => {
            let scenario = load_scenario(&config, cli.seed)?;
            let outcome = runner::run(&scenario, &out)?;
            if let Some(reason) = &outcome.aborted {
                eprintln!("run aborted: {reason} (last good snapshot retained)");
            } else {
                println!(
                    "status: {}",
                    if outcome.certificate.holding() { "holding" } else { "breached" }
                );
            }
            println!("run directory: {}", outcome.dir.display());
            Ok(ExitCode::from(outcome.exit_code() as u8))
        }
        Command::Audit { run, count, out } => {
            let report = runner::audit(&run, count)?;
            runner::write_audit_report(&report, &out)?;
            println!("audited {} points -> {}", report.records.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let summary = runner::sweep(&text, &out)?;
            println!("summary: {}", summary.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate { config, out } => {
            let scenario = load_scenario(&config, cli.seed)?;
            let calibration = runner::calibrate(&scenario, &out)?;
            match calibration.c_bar {
                Some(c) => println!("envelope rate c_bar = {c:.6}"),
                None => println!("corpus did not identify every constant; see constants.json"),
            }
            println!("constants: {}", out.join("constants.json").display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
