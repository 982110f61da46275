//! Command-line surface.

use std::path::PathBuf;

use afrelay::Protocol;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::grid::Grid;

#[derive(Debug, Parser)]
#[command(
    name = "afrelay",
    version,
    about = "Outage analysis and simulation of clipped OFDM amplify-and-forward relays"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo work (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Outage probability against the SNDR threshold, analytic and simulated.
    OutageSweep(OutageSweepArgs),
    /// Outage against source power, with the high-power expansion and a
    /// diversity fit.
    PowerSweep(PowerSweepArgs),
    /// Critical thresholds, ordinates and protocol comparison as JSON.
    Thresholds(ThresholdsArgs),
    /// Check the analytic model against the simulators.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Network parameters shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct NetworkArgs {
    /// Flat JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Source clip ratio p_max/σ² (`inf` for a linear source).
    #[arg(long, value_parser = parse_clip)]
    pub clip_s: Option<f64>,
    /// Relay clip ratio p_max/σ² (`inf` for a linear relay).
    #[arg(long, value_parser = parse_clip)]
    pub clip_r: Option<f64>,
    /// Source power over noise, P_S/N0, in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub n0: Option<f64>,
    /// Relay-to-source power ratio P_R/P_S.
    #[arg(long)]
    pub p_ratio: Option<f64>,
    #[arg(long)]
    pub subcarriers: Option<usize>,
    #[arg(long)]
    pub taps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutageSweepArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Option<Protocol>,
    /// Threshold grid in dB, `start:step:stop`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_db: Option<Grid>,
    /// Channel-level Monte Carlo trials per point; 0 skips simulation.
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PowerSweepArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Option<Protocol>,
    /// Single threshold in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_db: Option<Grid>,
    /// Source power grid in dB over N0, `start:step:stop`.
    #[arg(long, allow_hyphen_values = true)]
    pub ps_db: Option<Grid>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ThresholdsArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Thresholds in dB for the outage suite.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_db: Option<Grid>,
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    /// OFDM blocks per subcarrier SNDR measurement.
    #[arg(long, value_parser = parse_count)]
    pub blocks: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_clip(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "none" | "off" => Ok(f64::INFINITY),
        other => match other.parse::<f64>() {
            Ok(v) if v > 0.0 => Ok(v),
            _ => Err(format!("`{s}` is not a positive clip ratio or `inf`")),
        },
    }
}

/// Non-negative integer, also in floating notation such as `1e5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    count_from_f64(v).ok_or_else(|| format!("`{s}` is not a non-negative integer"))
}

pub(crate) fn count_from_f64(v: f64) -> Option<u64> {
    (v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53)).then_some(v as u64)
}

pub fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse::<Protocol>().map_err(|e| e.to_string())
}
