//! Merging the JSON config file, flags and defaults.

use std::fs;
use std::path::{Path, PathBuf};

use afrelay::{NetworkConfig, Protocol};
use serde::{Deserialize, Deserializer};

use crate::args::{count_from_f64, parse_clip, Format, NetworkArgs};
use crate::error::{config_err, CliError, CliResult};
use crate::grid::Grid;

/// Everything a config file may set. Keys mirror the long flag names with
/// underscores.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(deserialize_with = "protocol_value")]
    pub protocol: Option<Protocol>,
    #[serde(deserialize_with = "clip_value")]
    pub clip_s: Option<f64>,
    #[serde(deserialize_with = "clip_value")]
    pub clip_r: Option<f64>,
    pub snr_db: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub n0: Option<f64>,
    pub p_ratio: Option<f64>,
    pub subcarriers: Option<usize>,
    pub taps: Option<usize>,
    #[serde(deserialize_with = "grid_value")]
    pub gamma_db: Option<Grid>,
    #[serde(deserialize_with = "grid_value")]
    pub ps_db: Option<Grid>,
    #[serde(deserialize_with = "count_value")]
    pub trials: Option<u64>,
    #[serde(deserialize_with = "count_value")]
    pub blocks: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(f64),
    Text(String),
}

fn clip_value<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    let v: Option<NumOrText> = Option::deserialize(d)?;
    v.map(|v| match v {
        NumOrText::Num(x) if x > 0.0 => Ok(x),
        NumOrText::Num(x) => Err(format!("clip ratio {x} must be positive")),
        NumOrText::Text(s) => parse_clip(&s),
    })
    .transpose()
    .map_err(serde::de::Error::custom)
}

fn count_value<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    let v: Option<NumOrText> = Option::deserialize(d)?;
    v.map(|v| match v {
        NumOrText::Num(x) => {
            count_from_f64(x).ok_or_else(|| format!("{x} is not a non-negative integer"))
        }
        NumOrText::Text(s) => crate::args::parse_count(&s),
    })
    .transpose()
    .map_err(serde::de::Error::custom)
}

fn grid_value<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Grid>, D::Error> {
    let v: Option<NumOrText> = Option::deserialize(d)?;
    v.map(|v| match v {
        NumOrText::Num(x) if x.is_finite() => Ok(Grid::single(x)),
        NumOrText::Num(x) => Err(format!("{x} is not finite")),
        NumOrText::Text(s) => s.parse::<Grid>(),
    })
    .transpose()
    .map_err(serde::de::Error::custom)
}

fn protocol_value<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Protocol>, D::Error> {
    let v: Option<String> = Option::deserialize(d)?;
    v.map(|s| s.parse::<Protocol>().map_err(|e| e.to_string()))
        .transpose()
        .map_err(serde::de::Error::custom)
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub const DEFAULT_SNR_DB: f64 = 20.0;

/// Resolve the network from flags, then the config file, then defaults:
/// clip ratio 5 at the source and 8 at the relay, unit channel
/// variances and noise, equal powers, 512 subcarriers and 32 taps.
pub fn resolve_network(flags: &NetworkArgs, file: &FileConfig) -> CliResult<NetworkConfig> {
    let base = NetworkConfig::default();
    let n0 = flags.n0.or(file.n0).unwrap_or(base.n0);
    let snr_db = flags.snr_db.or(file.snr_db).unwrap_or(DEFAULT_SNR_DB);
    if !snr_db.is_finite() {
        return config_err("snr_db must be finite");
    }
    let cfg = NetworkConfig {
        mu1: flags.mu1.or(file.mu1).unwrap_or(base.mu1),
        mu2: flags.mu2.or(file.mu2).unwrap_or(base.mu2),
        n0,
        p_s: base.p_s,
        p_ratio: flags.p_ratio.or(file.p_ratio).unwrap_or(base.p_ratio),
        clip_ratio_s: flags.clip_s.or(file.clip_s).unwrap_or(base.clip_ratio_s),
        clip_ratio_r: flags.clip_r.or(file.clip_r).unwrap_or(base.clip_ratio_r),
        n_subcarriers: flags
            .subcarriers
            .or(file.subcarriers)
            .unwrap_or(base.n_subcarriers),
        n_taps: flags.taps.or(file.taps).unwrap_or(base.n_taps),
    }
    .with_snr_db(snr_db);
    if !(n0 > 0.0) {
        return config_err("n0 must be positive");
    }
    if cfg.n_taps > cfg.n_subcarriers {
        return config_err("taps must not exceed subcarriers");
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_file(flags: &NetworkArgs) -> CliResult<FileConfig> {
    match &flags.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}
