//! `eotk`: batch front end for the transducer models.
//!
//! ```text
//! eotk report    --config table1.json
//! eotk sweep     --config table1.json [--target pump_power]
//! eotk fit       --input spectrum.csv --model fano
//! eotk calibrate --signal s.csv --dark d.csv --center-hz ... --half-width-hz ... ...
//! eotk optimize  --config table1.json [--seed 0]
//! ```
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical failure, flagged
//! fit or failed check.

pub mod bundled;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use eotk_core::quantities::CouplingTopology;
use eotk_core::spectra::{CouplingHint, FitPolicy};

use crate::commands::calibrate::CalibrateArgs;
use crate::commands::Output;
use crate::config::{Objective, RunConfig, SweepTarget};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "eotk", version, about = "Electro-optic transducer modelling toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for randomized procedures.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FitModel {
    Fano,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum TopologyArg {
    SingleSided,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CouplingArg {
    OverCoupled,
    UnderCoupled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Device summary with derived quantities and consistency checks.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// CSV sweep over the grid in the config's `sweep` block.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `sweep.target`.
        #[arg(long, value_enum)]
        target: Option<SweepTarget>,
    },
    /// Fit a spectrum (`frequency_hz,psd_w_per_hz` plus JSON sidecar) or a time series (`time_s,value`).
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long, value_enum, default_value = "single_sided")]
        topology: TopologyArg,
        #[arg(long, value_enum, default_value = "over_coupled")]
        coupling: CouplingArg,
        /// Exponential fit window start, s.
        #[arg(long)]
        window_start: Option<f64>,
        /// Exponential fit window end, s.
        #[arg(long)]
        window_end: Option<f64>,
    },
    /// Efficiency from a heterodyne signal/dark pair.
    Calibrate {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        dark: PathBuf,
        /// Sideband frequency in the RF spectrum, Hz.
        #[arg(long)]
        center_hz: f64,
        /// Half width of the integration window, Hz.
        #[arg(long)]
        half_width_hz: f64,
        /// Width of the shot-noise reference band on each side, Hz.
        #[arg(long)]
        reference_width_hz: f64,
        /// Microwave power at the device, dBm. Falls back to the config operating point.
        #[arg(long)]
        rf_power_dbm: Option<f64>,
        /// Microwave drive frequency, Hz. Falls back to the config microwave mode.
        #[arg(long)]
        rf_frequency_hz: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        loss_uncertainty_db: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Coordinate-descent search over the box in the config's `optimize` block.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `optimize.objective`.
        #[arg(long, value_enum)]
        objective: Option<Objective>,
    },
}

impl From<TopologyArg> for CouplingTopology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::SingleSided => CouplingTopology::SingleSided,
            TopologyArg::TwoSided => CouplingTopology::TwoSided,
        }
    }
}

impl From<CouplingArg> for CouplingHint {
    fn from(c: CouplingArg) -> Self {
        match c {
            CouplingArg::OverCoupled => CouplingHint::OverCoupled,
            CouplingArg::UnderCoupled => CouplingHint::UnderCoupled,
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Report { config } => commands::report::run(&RunConfig::load(config)?),
        Command::Sweep { config, target } => commands::sweep::run(&RunConfig::load(config)?, *target),
        Command::Fit { input, model, topology, coupling, window_start, window_end } => match model {
            FitModel::Fano => commands::fit::fano(input, FitPolicy { topology: (*topology).into(), coupling: (*coupling).into() }),
            FitModel::Exponential => commands::fit::exponential(input, *window_start, *window_end),
        },
        Command::Calibrate { signal, dark, center_hz, half_width_hz, reference_width_hz, rf_power_dbm, rf_frequency_hz, loss_uncertainty_db, config } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let rf_power_dbm = rf_power_dbm
                .or(cfg.as_ref().map(|c| c.operating_point.rf_power_dbm))
                .ok_or_else(|| CliError::input("give --rf-power-dbm or a --config with an operating point"))?;
            let rf_frequency_hz = rf_frequency_hz
                .or(cfg.as_ref().map(|c| c.device.microwave.frequency_hz))
                .ok_or_else(|| CliError::input("give --rf-frequency-hz or a --config with a microwave mode"))?;
            let args = CalibrateArgs {
                center_hz: *center_hz,
                half_width_hz: *half_width_hz,
                reference_width_hz: *reference_width_hz,
                rf_power_dbm,
                rf_frequency_hz,
                loss_uncertainty_db: *loss_uncertainty_db,
            };
            commands::calibrate::run(signal, dark, args)
        }
        Command::Optimize { config, objective } => commands::optimize::run(&config::read_value(config)?, cli.seed, *objective),
    }
}

/// Runs the parsed command, writes its output and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli).and_then(|o| io::emit(cli.out.as_deref(), &o.text).map(|_| o)) {
        Ok(o) => {
            for n in &o.notes {
                eprintln!("{n}");
            }
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
