//! `doa-sim`: run a configured Monte Carlo sweep and write the curve table
//! as CSV.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use doa::harness::{emit_csv, run_experiment, ExperimentConfig, RunOptions};
use doa::DoaError;

#[derive(Parser, Debug)]
#[command(
    name = "doa-sim",
    about = "Seeded Monte Carlo sweeps for direction-of-arrival estimators",
    version
)]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,

    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<usize>,

    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads: a number or "auto". Defaults to the DOA_THREADS
    /// environment variable, then to one worker per core.
    #[arg(long)]
    threads: Option<String>,

    /// Measure per-method wall time (makes the CSV nondeterministic).
    #[arg(long)]
    timing: bool,

    /// Progress lines on stderr.
    #[arg(long, short)]
    verbose: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn parse_threads(spec: &str) -> Result<Option<usize>, String> {
    if spec.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    spec.parse::<usize>()
        .map(Some)
        .map_err(|_| format!("--threads expects a number or \"auto\", got `{spec}`"))
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, String> {
    if let Some(spec) = &cli.threads {
        return parse_threads(spec);
    }
    if let Ok(env_spec) = std::env::var("DOA_THREADS") {
        if !env_spec.is_empty() {
            return parse_threads(&env_spec);
        }
    }
    Ok(None)
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("doa-sim: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_IO,
                format!("cannot read --config {}: {e}", cli.config.display()),
            )
        }
    };
    let mut config = match ExperimentConfig::from_toml_str(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(trials) = cli.trials {
        config.run.trials = trials;
    }
    if let Some(seed) = cli.seed {
        config.run.base_seed = seed;
    }
    let threads = match thread_count(&cli) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, e),
    };

    let options = RunOptions {
        threads,
        timing: cli.timing,
        verbose: cli.verbose,
    };
    let table = match run_experiment(&config, &options) {
        Ok(t) => t,
        Err(e @ DoaError::Io(_)) => return fail(EXIT_IO, e),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if cli.verbose {
        eprintln!(
            "doa-sim: {} curve points, {} numerical faults",
            table.points.len(),
            table.faults
        );
    }
    match emit_csv(&table.points, &cli.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_IO, format!("cannot write {}: {e}", cli.out.display())),
    }
}
