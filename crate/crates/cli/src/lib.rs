//! Command-line front end: scenario files, parameter sweeps and reports.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

use std::path::Path;

use phasenoise::config::Units;

pub use args::{Cli, Command};
pub use commands::Outcome;
pub use error::{CliError, CliResult};
pub use scenario::Scenario;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "PHASENOISE_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
}

fn load_scenario(cli: &Cli) -> CliResult<Scenario> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("this command needs --config <FILE>".into()))?;
    let mut s = Scenario::load(path)?;
    if let Some(u) = cli.units {
        s.set_units(u.into());
    }
    if let Some(seed) = cli.seed {
        s.set_seed(seed)?;
    }
    Ok(s)
}

/// Runs one parsed command line.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Analytic => commands::analytic(&load_scenario(cli)?),
        Command::Simulate(a) => {
            let opts = commands::SimulateOptions {
                mode: a.mode.map(Into::into),
                trajectories: a.trajectories,
                dump: a.dump_trajectories.clone(),
            };
            let (outcome, traj) = commands::simulate(&load_scenario(cli)?, &opts)?;
            if let (Some(path), Some(t)) = (&opts.dump, traj) {
                let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
                t.write_csv(std::io::BufWriter::new(f))?;
            }
            Ok(outcome)
        }
        Command::Sweep(a) => commands::sweep(&load_scenario(cli)?, &a.mode),
        Command::Coupled(a) => commands::coupled(&load_scenario(cli)?, a.method),
        Command::Psd(a) => {
            if cli.units == Some(args::UnitsArg::Hz) {
                return Err(CliError::Usage("psd works in rad/s; --units does not apply".into()));
            }
            commands::psd(&commands::PsdOptions {
                input: a.input.clone(),
                column: a.column.clone(),
                dt: a.dt,
                segment: a.segment,
                overlap: a.overlap,
            })
        }
    }
}

/// Writes the outcome: the CSV form (or the payload) to `output` if given,
/// otherwise the payload to stdout.
pub fn emit(outcome: &Outcome, output: Option<&Path>, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    match output {
        Some(path) => {
            let body = outcome.csv.as_deref().unwrap_or(&outcome.payload);
            std::fs::write(path, body).map_err(|e| CliError::io(path, e))
        }
        None => stdout
            .write_all(outcome.payload.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

impl From<args::UnitsArg> for Units {
    fn from(u: args::UnitsArg) -> Self {
        match u {
            args::UnitsArg::Rad => Units::Rad,
            args::UnitsArg::Hz => Units::Hz,
        }
    }
}
