//! Quasi-static multipath channels for the two hops.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special_math::UnitaryDft;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// I.i.d. taps of variance `nμ/l`, so each subcarrier response has
    /// variance exactly `μ`.
    #[default]
    Statistical,
    /// Gaussian taps rescaled to total power `n/l`; per-subcarrier mean
    /// power is then `1/l` and `μ` is ignored.
    UnitNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps_h1: Vec<Complex64>,
    pub taps_h2: Vec<Complex64>,
    /// Unitary DFT of the zero-padded first-hop taps.
    pub freq_h1: Vec<Complex64>,
    pub freq_h2: Vec<Complex64>,
    pub normalization_mode: ChannelMode,
}

impl ChannelRealization {
    /// Build from explicit taps; `n` is the number of subcarriers.
    pub fn from_taps(
        taps_h1: Vec<Complex64>,
        taps_h2: Vec<Complex64>,
        n: usize,
        normalization_mode: ChannelMode,
    ) -> Result<Self> {
        if taps_h1.is_empty() || taps_h1.len() != taps_h2.len() {
            return domain("both hops need the same non-zero number of taps");
        }
        if taps_h1.len() > n {
            return domain(format!("{} taps exceed {n} subcarriers", taps_h1.len()));
        }
        let dft = UnitaryDft::new(n)?;
        let freq = |taps: &[Complex64]| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            buf[..taps.len()].copy_from_slice(taps);
            dft.forward(&mut buf);
            buf
        };
        Ok(Self {
            freq_h1: freq(&taps_h1),
            freq_h2: freq(&taps_h2),
            taps_h1,
            taps_h2,
            normalization_mode,
        })
    }

    pub fn n_taps(&self) -> usize {
        self.taps_h1.len()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.freq_h1.len()
    }

    /// `|h₁ₖ|²`.
    pub fn gain_h1(&self, k: usize) -> f64 {
        self.freq_h1[k].norm_sqr()
    }

    /// `|h₂ₖ|²`.
    pub fn gain_h2(&self, k: usize) -> f64 {
        self.freq_h2[k].norm_sqr()
    }
}

/// Circularly-symmetric complex Gaussian sample of the given variance.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn draw_taps<R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    n: usize,
    mu: f64,
    mode: ChannelMode,
) -> Vec<Complex64> {
    match mode {
        ChannelMode::Statistical => {
            let var = n as f64 * mu / l as f64;
            (0..l).map(|_| complex_gaussian(rng, var)).collect()
        }
        ChannelMode::UnitNorm => {
            let raw: Vec<Complex64> = (0..l).map(|_| complex_gaussian(rng, 1.0)).collect();
            let norm = raw.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
            let scale = (n as f64 / l as f64).sqrt() / norm;
            raw.into_iter().map(|t| t * scale).collect()
        }
    }
}

/// Draw an `l`-tap channel for each hop over `n` subcarriers.
pub fn gen_channel<R: Rng + ?Sized>(
    l: usize,
    n: usize,
    mu1: f64,
    mu2: f64,
    mode: ChannelMode,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if l == 0 || l > n {
        return domain(format!("need 1 <= l <= n, got l = {l}, n = {n}"));
    }
    if !(mu1 > 0.0) || !(mu2 > 0.0) {
        return domain("channel variances must be positive");
    }
    let h1 = draw_taps(rng, l, n, mu1, mode);
    let h2 = draw_taps(rng, l, n, mu2, mode);
    ChannelRealization::from_taps(h1, h2, n, mode)
}
