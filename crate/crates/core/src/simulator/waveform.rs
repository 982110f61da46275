//! Time-domain OFDM chain: source limiter, hop 1, AF relay with its own
//! limiter, hop 2, and destination demodulation.
//!
//! The cyclic prefix is inserted at the source and removed only at the
//! destination, so it has to cover the memory of both hops. By default the
//! relay applies its gain to the prefix-free window and re-extends it
//! cyclically, which is what a per-subcarrier gain needs anyway. A fixed-gain
//! relay can instead scale the raw received block sample by sample
//! ([`RelayMode::Transparent`]); its noise over the prefix is then not
//! circular, which perturbs each subcarrier's noise by `O(l/n)`.

use num_complex::Complex64;
use rand::Rng;

use super::channel::{complex_gaussian, ChannelRealization};
use crate::bussgang::clip;
use crate::error::{Error, Result};
use crate::link_budget::{LinkBudget, Protocol};
use crate::special_math::UnitaryDft;

/// Uniform QPSK symbols `{±1 ± i}·√(σ²/2)`.
pub fn gen_qpsk_block<R: Rng + ?Sized>(n: usize, sigma_sq: f64, rng: &mut R) -> Vec<Complex64> {
    let a = (0.5 * sigma_sq).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut bits = 0u64;
    for i in 0..n {
        if i % 32 == 0 {
            bits = rng.random();
        }
        let re = if bits & 1 == 0 { a } else { -a };
        let im = if bits & 2 == 0 { a } else { -a };
        bits >>= 2;
        out.push(Complex64::new(re, im));
    }
    out
}

/// How the relay applies its gain in the time domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RelayMode {
    /// Scale the prefix-free window per subcarrier and re-extend cyclically.
    #[default]
    Windowed,
    /// Scale every received sample, prefix included. Fixed gain only.
    Transparent,
}

/// One transmitted block: the source symbols and what the destination
/// demodulates on each subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformBlock {
    pub x_s: Vec<Complex64>,
    pub y_d: Vec<Complex64>,
    /// Mean power at the relay limiter input over the data window.
    pub relay_input_power: f64,
}

/// Precomputed chain for one channel realization.
pub struct WaveformChain<'a> {
    protocol: Protocol,
    channel: &'a ChannelRealization,
    budget: &'a LinkBudget,
    dft: UnitaryDft,
    cp_len: usize,
    relay_mode: RelayMode,
    /// Zero-padded transform used for linear convolution.
    conv_dft: UnitaryDft,
    /// Hop responses on the convolution grid, pre-scaled for the unitary
    /// convolution theorem.
    hop1: Vec<Complex64>,
    hop2: Vec<Complex64>,
    /// FG: a single gain; VG: one gain per subcarrier.
    gains: Vec<f64>,
}

impl<'a> WaveformChain<'a> {
    /// Chain with the shortest admissible prefix, `2l + 1` samples.
    pub fn new(
        protocol: Protocol,
        channel: &'a ChannelRealization,
        budget: &'a LinkBudget,
    ) -> Result<Self> {
        Self::with_cp_len(protocol, channel, budget, 2 * channel.n_taps() + 1)
    }

    pub fn with_cp_len(
        protocol: Protocol,
        channel: &'a ChannelRealization,
        budget: &'a LinkBudget,
        cp_len: usize,
    ) -> Result<Self> {
        let l = channel.n_taps();
        if cp_len <= 2 * l {
            return Err(Error::Config(format!(
                "cyclic prefix of {cp_len} samples must exceed twice the {l} channel taps"
            )));
        }
        let n = channel.n_subcarriers();
        let dft = UnitaryDft::new(n)?;
        let conv_len = (n + cp_len + l - 1).next_power_of_two();
        let conv_dft = UnitaryDft::new(conv_len)?;
        // Linear convolution with taps/√n has subcarrier response freq[k];
        // the unitary convolution theorem contributes another √conv_len.
        let scale = (conv_len as f64 / n as f64).sqrt();
        let spectrum = |taps: &[Complex64]| {
            let mut buf = vec![Complex64::new(0.0, 0.0); conv_len];
            for (b, t) in buf.iter_mut().zip(taps) {
                *b = t * scale;
            }
            conv_dft.forward(&mut buf);
            buf
        };
        let hop1 = spectrum(&channel.taps_h1);
        let hop2 = spectrum(&channel.taps_h2);
        let gains = match protocol {
            Protocol::Fg => vec![budget.gain_sq(Protocol::Fg, budget.config.mu1).sqrt()],
            Protocol::Vg => (0..n)
                .map(|k| budget.gain_sq(Protocol::Vg, channel.gain_h1(k)).sqrt())
                .collect(),
        };
        Ok(Self {
            protocol,
            channel,
            budget,
            dft,
            cp_len,
            relay_mode: RelayMode::Windowed,
            conv_dft,
            hop1,
            hop2,
            gains,
        })
    }

    pub fn with_relay_mode(mut self, relay_mode: RelayMode) -> Result<Self> {
        if relay_mode == RelayMode::Transparent && self.protocol == Protocol::Vg {
            return Err(Error::Config(
                "a variable-gain relay needs the windowed mode".into(),
            ));
        }
        self.relay_mode = relay_mode;
        Ok(self)
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn n_subcarriers(&self) -> usize {
        self.channel.n_subcarriers()
    }

    /// Transmit one random QPSK block through the chain.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> WaveformBlock {
        let x_s = gen_qpsk_block(self.n_subcarriers(), self.budget.sel_s.sigma_sq, rng);
        self.transmit(x_s, rng)
    }

    /// Transmit the given subcarrier symbols through the chain.
    pub fn transmit<R: Rng + ?Sized>(&self, x_s: Vec<Complex64>, rng: &mut R) -> WaveformBlock {
        let n = self.n_subcarriers();
        let (cp, n0) = (self.cp_len, self.budget.config.n0);

        let mut time = x_s.clone();
        self.dft.inverse(&mut time);
        let amp_s = self.budget.sel_s.p_max.sqrt();
        let tx: Vec<Complex64> = cyclic_extend(&time, cp)
            .into_iter()
            .map(|v| clip(v, amp_s))
            .collect();

        let mut relay_rx = self.convolve(&tx, &self.hop1);
        add_noise(&mut relay_rx, n0, rng);

        let mut relay_in = match (self.protocol, self.relay_mode) {
            (Protocol::Fg, RelayMode::Transparent) => {
                let g = self.gains[0];
                relay_rx.iter().map(|v| v * g).collect::<Vec<_>>()
            }
            (Protocol::Fg, RelayMode::Windowed) => {
                let g = self.gains[0];
                let window: Vec<Complex64> = relay_rx[cp..cp + n].iter().map(|v| v * g).collect();
                cyclic_extend(&window, cp)
            }
            (Protocol::Vg, _) => {
                let mut window = relay_rx[cp..cp + n].to_vec();
                self.dft.forward(&mut window);
                for (v, g) in window.iter_mut().zip(&self.gains) {
                    *v *= g;
                }
                self.dft.inverse(&mut window);
                cyclic_extend(&window, cp)
            }
        };
        let relay_input_power = relay_in[cp..].iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let amp_r = self.budget.sel_r.p_max.sqrt();
        for v in relay_in.iter_mut() {
            *v = clip(*v, amp_r);
        }

        let mut dest_rx = self.convolve(&relay_in, &self.hop2);
        add_noise(&mut dest_rx, n0, rng);
        let mut y_d = dest_rx[cp..cp + n].to_vec();
        self.dft.forward(&mut y_d);
        WaveformBlock {
            x_s,
            y_d,
            relay_input_power,
        }
    }
}

impl WaveformChain<'_> {
    /// Linear convolution truncated to the input length, zero initial state.
    fn convolve(&self, signal: &[Complex64], spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); spectrum.len()];
        buf[..signal.len()].copy_from_slice(signal);
        self.conv_dft.forward(&mut buf);
        for (b, h) in buf.iter_mut().zip(spectrum) {
            *b *= h;
        }
        self.conv_dft.inverse(&mut buf);
        buf.truncate(signal.len());
        buf
    }
}

/// Run one block through a freshly built chain.
pub fn run_waveform_trial<R: Rng + ?Sized>(
    protocol: Protocol,
    channel: &ChannelRealization,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<WaveformBlock> {
    Ok(WaveformChain::new(protocol, channel, budget)?.run(rng))
}

/// Prepend the last `cp` samples (wrapping if `cp` exceeds the block).
fn cyclic_extend(block: &[Complex64], cp: usize) -> Vec<Complex64> {
    let n = block.len();
    let mut out = Vec::with_capacity(n + cp);
    out.extend((0..cp).map(|i| block[(n - cp % n + i) % n]));
    out.extend_from_slice(block);
    out
}

fn add_noise<R: Rng + ?Sized>(buf: &mut [Complex64], n0: f64, rng: &mut R) {
    if n0 > 0.0 {
        for v in buf.iter_mut() {
            *v += complex_gaussian(rng, n0);
        }
    }
}
