//! Monte Carlo ground truth for the analytic layers.
//!
//! * [`channel`]: per-hop multipath channels and their subcarrier responses.
//! * [`waveform`]: the full time-domain OFDM chain through both limiters.
//! * [`montecarlo`]: channel-level and waveform-level outage estimation,
//!   SNDR measurement and the fixed-gain stationarity check.
//!
//! Randomness is counter-based: every unit of parallel work draws from its
//! own ChaCha stream `(seed, stream_id)`, and partial results are combined in
//! stream order, so results never depend on the thread count.

pub mod channel;
pub mod montecarlo;
pub mod waveform;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use channel::{gen_channel, ChannelMode, ChannelRealization};
pub use montecarlo::{
    estimate_bussgang, fg_stationarity_check, mc_outage, mc_outage_sweep, measure_sndr,
    predicted_sndr, sample_bussgang, sndr_relative_std_error, waveform_outage, BussgangEstimate,
};
pub use waveform::{gen_qpsk_block, run_waveform_trial, RelayMode, WaveformBlock, WaveformChain};

/// Generator used by every simulation routine.
pub type SimRng = ChaCha8Rng;

/// Trials handled by one RNG stream in the channel-level estimators.
pub const TRIALS_PER_STREAM: u64 = 4096;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Root seed; `stream(id)` yields an independent, reproducible generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn stream(self, stream_id: u64) -> SimRng {
        let mut rng = SimRng::seed_from_u64(self.0);
        rng.set_stream(stream_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimStats {
    pub n_trials: u64,
    pub n_outages: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub zeta_hat: Option<f64>,
    pub eta_hat: Option<f64>,
    pub resid_corr: Option<f64>,
}

impl SimStats {
    pub fn from_counts(n_outages: u64, n_trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(n_outages, n_trials);
        let p_hat = if n_trials == 0 {
            0.0
        } else {
            n_outages as f64 / n_trials as f64
        };
        Self {
            n_trials,
            n_outages,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            zeta_hat: None,
            eta_hat: None,
            resid_corr: None,
        }
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex sum, one accumulator per component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub(crate) fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}
