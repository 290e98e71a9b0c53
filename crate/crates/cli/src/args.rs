use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasenoise::sim::RunMode;

use crate::commands::CoupledMethod;
use crate::scenario::SweepMode;

#[derive(Debug, Parser)]
#[command(name = "phasenoise", version, about = "Laser phase-noise heating of pumped cavities")]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write results here instead of stdout; text reports are written as CSV.
    #[arg(long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Override `[sim] seed`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,

    /// Override the scenario's units.
    #[arg(long, global = true, value_enum)]
    pub units: Option<UnitsArg>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Rad,
    Hz,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form occupation, effective temperature and feasibility margins.
    Analytic,
    /// Monte Carlo ensemble of the Langevin equation.
    Simulate(SimulateArgs),
    /// Grid of scenarios from the `[sweep]` section, as CSV.
    Sweep(SweepArgs),
    /// Steady state of the cavity coupled to a mechanical mode.
    Coupled(CoupledArgs),
    /// Welch spectrum of a column of samples.
    Psd(PsdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Displaced,
    Lab,
    Twin,
    TwoCavity,
}

impl From<SimMode> for RunMode {
    fn from(m: SimMode) -> Self {
        match m {
            SimMode::Displaced => RunMode::Displaced,
            SimMode::Lab => RunMode::Lab,
            SimMode::Twin => RunMode::Twin,
            SimMode::TwoCavity => RunMode::TwoCavityLab,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Defaults to `[sim] frame`.
    #[arg(long, value_enum)]
    pub mode: Option<SimMode>,

    /// Override `[sim] n_trajectories`.
    #[arg(long)]
    pub trajectories: Option<usize>,

    /// Write the first trajectory as CSV.
    #[arg(long, value_name = "FILE")]
    pub dump_trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Modes to run at every point; overrides `[sweep] modes`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub mode: Vec<SweepMode>,
}

#[derive(Debug, Args)]
pub struct CoupledArgs {
    #[arg(long, value_enum, default_value = "lyapunov")]
    pub method: CoupledMethod,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    /// CSV file with a header row.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Column to analyse; defaults to the second column.
    #[arg(long)]
    pub column: Option<String>,

    /// Sample spacing in seconds; defaults to the spacing of a `t` column.
    #[arg(long)]
    pub dt: Option<f64>,

    /// Segment length in samples.
    #[arg(long)]
    pub segment: Option<usize>,

    /// Fractional segment overlap.
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_follow_the_subcommand() {
        let c = Cli::try_parse_from(["phasenoise", "simulate", "--config", "a.toml", "--seed", "5", "--mode", "two-cavity"]).unwrap();
        assert_eq!(c.seed, Some(5));
        match c.command {
            Command::Simulate(a) => assert_eq!(a.mode, Some(SimMode::TwoCavity)),
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["phasenoise", "analytic", "--seed", "-1"]).is_err());
        let s = Cli::try_parse_from(["phasenoise", "sweep", "--mode", "analytic,twin"]).unwrap();
        match s.command {
            Command::Sweep(a) => assert_eq!(a.mode, [SweepMode::Analytic, SweepMode::Twin]),
            _ => panic!(),
        }
    }
}
