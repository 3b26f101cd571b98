//! `capsense` command-line experiment runner.
//!
//! Each subcommand runs one experiment, writes its CSV files plus
//! `summary.txt` into the output directory, and echoes the summary to stdout.

pub mod config;
pub mod experiments;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "capsense", version, about = "Capacitive sensor read-out simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "capsense-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ChopperArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Constant acceleration in g; overrides `accel_g` in the config file.
    #[arg(long, allow_hyphen_values = true)]
    pub accel_g: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic cycle time and frequency over a capacitance sweep.
    CfcSweep(CommonArgs),
    /// Step-by-step oscillator simulation with gate-time counting.
    CfcTransient(CommonArgs),
    /// One pass through the chopper-stabilized chain.
    ChopperRun(ChopperArgs),
    /// Chopped versus unchopped output error on one noise realization.
    ChopperSuppression(ChopperArgs),
    /// Device-spread Monte Carlo of the chopper chain.
    Montecarlo(ChopperArgs),
    /// Side-by-side comparison of both interfaces.
    Compare(CommonArgs),
    /// Power spectral density of amplifier noise or a chopper signal.
    Psd(ChopperArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CfcSweep(_) => "cfc-sweep",
            Command::CfcTransient(_) => "cfc-transient",
            Command::ChopperRun(_) => "chopper-run",
            Command::ChopperSuppression(_) => "chopper-suppression",
            Command::Montecarlo(_) => "montecarlo",
            Command::Compare(_) => "compare",
            Command::Psd(_) => "psd",
        }
    }
}

pub use experiments::{run, Outcome};
