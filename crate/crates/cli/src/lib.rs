//! Batch front end for the `afrelay` model: sweeps, threshold reports and
//! validation campaigns with CSV or JSON output.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod grid;

use std::process::ExitCode;

use args::{Cli, Command};
use commands::Output;
use error::{CliError, CliResult};

/// Run one parsed invocation: 0 on success, 1 when validation fails and 2
/// for usage or configuration errors.
pub fn run(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok(out) if out.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Compute the command's output in full, then write it.
pub fn execute(cli: &Cli) -> CliResult<Output> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, as when called twice in-process.
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::debug!("keeping existing thread pool: {e}");
        }
    }
    let out = dispatch(&cli.command)?;
    out.write()?;
    Ok(out)
}

pub fn dispatch(command: &Command) -> CliResult<Output> {
    match command {
        Command::OutageSweep(a) => commands::outage_sweep(a),
        Command::PowerSweep(a) => commands::power_sweep(a),
        Command::Thresholds(a) => commands::thresholds(a),
        Command::Validate(a) => commands::validate(a),
    }
}
