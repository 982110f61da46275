//! Network parameters, relay gains and the per-subcarrier SNDR.
//!
//! Hop `β ∈ {1, 2}` has per-subcarrier channel gain `|h_βk|² ~ Exp(μ_β)`.
//! The source limiter runs at input power `σ_S²` chosen so that its average
//! output power is `P_S`; the relay likewise for `P_R = P̃_R·P_S`. With both
//! clip ratios fixed, `σ_β²` and `η_β` scale linearly with `P_S`, and the
//! `tilde_*` fields hold those proportionality constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bussgang::{sel_params, sigma_for_target_power, SelParams};
use crate::error::{domain, Error, Result};

/// Relay amplification strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Fixed gain, normalized by the average first-hop received power.
    Fg,
    /// Variable gain, normalized per subcarrier by the instantaneous power.
    Vg,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::Fg, Protocol::Vg];
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Fg => "fg",
            Protocol::Vg => "vg",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fg" | "fixed" => Ok(Protocol::Fg),
            "vg" | "variable" => Ok(Protocol::Vg),
            other => Err(Error::Config(format!(
                "unknown protocol `{other}` (expected fg or vg)"
            ))),
        }
    }
}

/// Raw network parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Per-subcarrier variance of hop 1.
    pub mu1: f64,
    /// Per-subcarrier variance of hop 2.
    pub mu2: f64,
    /// Noise power at relay and destination.
    pub n0: f64,
    /// Source average transmit power.
    pub p_s: f64,
    /// Relay-to-source power ratio `P_R / P_S`.
    pub p_ratio: f64,
    /// Source clip ratio `p_max / σ²` (`+∞` for a linear source).
    pub clip_ratio_s: f64,
    /// Relay clip ratio (`+∞` for a linear relay).
    pub clip_ratio_r: f64,
    pub n_subcarriers: usize,
    pub n_taps: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 1.0,
            n0: 1.0,
            p_s: 100.0,
            p_ratio: 1.0,
            clip_ratio_s: 5.0,
            clip_ratio_r: 8.0,
            n_subcarriers: 512,
            n_taps: 32,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("mu1", self.mu1)?;
        positive("mu2", self.mu2)?;
        positive("p_s", self.p_s)?;
        positive("p_ratio", self.p_ratio)?;
        if !(self.n0 >= 0.0) || self.n0.is_infinite() {
            return Err(Error::Config(format!(
                "n0 must be non-negative and finite, got {}",
                self.n0
            )));
        }
        for (name, r) in [
            ("clip_ratio_s", self.clip_ratio_s),
            ("clip_ratio_r", self.clip_ratio_r),
        ] {
            if !(r > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive or +inf, got {r}"
                )));
            }
        }
        if self.n_subcarriers == 0 || self.n_taps == 0 {
            return Err(Error::Config(
                "n_subcarriers and n_taps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The same network at a different source power.
    pub fn with_p_s(&self, p_s: f64) -> Self {
        Self { p_s, ..*self }
    }

    /// Source power set from `P_S / N₀` in dB.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        self.with_p_s(self.n0 * crate::special_math::from_db(snr_db))
    }
}

/// A validated network with every derived quantity precomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub config: NetworkConfig,
    pub sel_s: SelParams,
    pub sel_r: SelParams,
    /// Relay average transmit power.
    pub p_r: f64,
    /// `P_S μ₁ / N₀`.
    pub sigma1_bar: f64,
    /// `P_R μ₂ / N₀`.
    pub sigma2_bar: f64,
    /// `N₀ / η_S`, `+∞` for a linear source.
    pub eps_s: f64,
    /// `N₀ / η_R`, `+∞` for a linear relay.
    pub eps_r: f64,
    /// `min(ε_S, ε_R)`.
    pub eps_star: f64,
    pub tilde_sigma_s_sq: f64,
    pub tilde_sigma_r_sq: f64,
    pub tilde_eta_s: f64,
    pub tilde_eta_r: f64,
}

impl LinkBudget {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        build_budget(config)
    }

    /// Average critical second-hop SNR, `Σ̄₂ − (1+γ)μ₂/ε_R`.
    ///
    /// Evaluated as `μ₂(ζ_R²σ_R² − γη_R)/N₀`, which is the same quantity
    /// without the cancellation between `Σ̄₂` and `μ₂/ε_R`.
    pub fn sigma_r_bar(&self, gamma_th: f64) -> f64 {
        let excess = self.sel_r.signal_power() - gamma_th * self.sel_r.eta;
        ratio_or_signed_inf(self.config.mu2 * excess, self.config.n0)
    }

    /// `ζ_S²σ_S²`.
    pub fn source_signal_power(&self) -> f64 {
        self.sel_s.signal_power()
    }

    /// `ζ_R²σ_R²`.
    pub fn relay_signal_power(&self) -> f64 {
        self.sel_r.signal_power()
    }

    /// `σ̃_S²ζ_S²`.
    pub fn tilde_source_signal(&self) -> f64 {
        self.tilde_sigma_s_sq * self.sel_s.zeta * self.sel_s.zeta
    }

    /// `σ̃_R²ζ_R²`.
    pub fn tilde_relay_signal(&self) -> f64 {
        self.tilde_sigma_r_sq * self.sel_r.zeta * self.sel_r.zeta
    }

    pub fn max_tilde_eta(&self) -> f64 {
        self.tilde_eta_s.max(self.tilde_eta_r)
    }

    pub fn p_ratio(&self) -> f64 {
        self.config.p_ratio
    }

    /// Squared relay gain for a given first-hop channel gain.
    pub fn gain_sq(&self, protocol: Protocol, h1_gain: f64) -> f64 {
        let c = &self.config;
        let received = match protocol {
            Protocol::Fg => c.p_s * c.mu1 + c.n0,
            Protocol::Vg => c.p_s * h1_gain + c.n0,
        };
        self.sel_r.sigma_sq / received
    }
}

fn ratio_or_signed_inf(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else if num < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

fn noise_to_distortion(n0: f64, eta: f64) -> f64 {
    if eta > 0.0 {
        n0 / eta
    } else {
        f64::INFINITY
    }
}

/// Derive every budget quantity from a raw configuration.
pub fn build_budget(config: NetworkConfig) -> Result<LinkBudget> {
    config.validate()?;
    let p_s = config.p_s;
    let p_r = config.p_ratio * p_s;
    let sigma_s_sq = sigma_for_target_power(p_s, config.clip_ratio_s)?;
    let sigma_r_sq = sigma_for_target_power(p_r, config.clip_ratio_r)?;
    let sel_s = sel_params(sigma_s_sq, config.clip_ratio_s * sigma_s_sq)?;
    let sel_r = sel_params(sigma_r_sq, config.clip_ratio_r * sigma_r_sq)?;
    let eps_s = noise_to_distortion(config.n0, sel_s.eta);
    let eps_r = noise_to_distortion(config.n0, sel_r.eta);
    Ok(LinkBudget {
        config,
        sel_s,
        sel_r,
        p_r,
        sigma1_bar: ratio_or_signed_inf(p_s * config.mu1, config.n0),
        sigma2_bar: ratio_or_signed_inf(p_r * config.mu2, config.n0),
        eps_s,
        eps_r,
        eps_star: eps_s.min(eps_r),
        tilde_sigma_s_sq: sigma_s_sq / p_s,
        tilde_sigma_r_sq: sigma_r_sq / p_s,
        tilde_eta_s: sel_s.eta / p_s,
        tilde_eta_r: sel_r.eta / p_s,
    })
}

/// Fixed relay gain `√(σ_R² / (P_S μ₁ + N₀))`.
pub fn gain_fg(budget: &LinkBudget) -> f64 {
    budget.gain_sq(Protocol::Fg, budget.config.mu1).sqrt()
}

/// Variable relay gain `√(σ_R² / (P_S |h₁|² + N₀))`.
pub fn gain_vg(budget: &LinkBudget, h1_gain: f64) -> Result<f64> {
    if !(h1_gain >= 0.0) {
        return domain(format!("channel gain must be non-negative, got {h1_gain}"));
    }
    Ok(budget.gain_sq(Protocol::Vg, h1_gain).sqrt())
}

/// Instantaneous end-to-end SNDR on one subcarrier.
///
/// `λ = σ_S²ζ_S²|h₁|²G²ζ_R²|h₂|² / (|h₂|²(G²ζ_R²N₀ + η_S|h₁|²G²ζ_R² + η_R) + N₀)`
pub fn sndr(protocol: Protocol, h1_gain: f64, h2_gain: f64, budget: &LinkBudget) -> Result<f64> {
    if !(h1_gain >= 0.0) || !(h2_gain >= 0.0) {
        return domain("channel gains must be non-negative");
    }
    Ok(sndr_unchecked(protocol, h1_gain, h2_gain, budget))
}

#[inline]
pub(crate) fn sndr_unchecked(
    protocol: Protocol,
    h1_gain: f64,
    h2_gain: f64,
    b: &LinkBudget,
) -> f64 {
    let g_sq = b.gain_sq(protocol, h1_gain);
    let zr_sq = b.sel_r.zeta * b.sel_r.zeta;
    let relay = g_sq * zr_sq;
    let num = b.source_signal_power() * h1_gain * relay * h2_gain;
    if num == 0.0 {
        return 0.0;
    }
    let n0 = b.config.n0;
    let den = h2_gain * (relay * n0 + b.sel_s.eta * h1_gain * relay + b.sel_r.eta) + n0;
    num / den
}

/// SNDR written as `scale / (a + l·ε★ + q·ε★²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedSndr {
    pub a: f64,
    pub lcoef: f64,
    pub q: f64,
    pub numerator_scale: f64,
    pub eps_star: f64,
}

impl NormalizedSndr {
    pub fn value(&self) -> f64 {
        let e = self.eps_star;
        self.numerator_scale / (self.a + self.lcoef * e + self.q * e * e)
    }
}

/// Coefficients of the SNDR as a quadratic in `ε★ = N₀ / max η_β`.
///
/// With `M̃ = max η̃_β`:
///
/// * FG: scale `σ̃_S²ζ_S²σ̃_R²ζ_R²|h₁|²/(μ₁M̃)`,
///   `a = (η̃_R + σ̃_R²ζ_R²η̃_S|h₁|²/μ₁)/M̃`, `l = 1/|h₂|² + P̃_R/μ₁`,
///   `q = M̃/(μ₁|h₂|²)`.
/// * VG: scale `σ̃_S²ζ_S²σ̃_R²ζ_R²/M̃`, `a = (η̃_R + σ̃_R²ζ_R²η̃_S)/M̃`,
///   `l = 1/|h₂|² + P̃_R/|h₁|²`, `q = M̃/(|h₁|²|h₂|²)`.
pub fn normalized_sndr_coeffs(
    protocol: Protocol,
    h1_gain: f64,
    h2_gain: f64,
    budget: &LinkBudget,
) -> Result<NormalizedSndr> {
    if !(h1_gain >= 0.0) || !(h2_gain >= 0.0) {
        return domain("channel gains must be non-negative");
    }
    let m = budget.max_tilde_eta();
    if !(m > 0.0) {
        return domain("normalized SNDR needs distortion at the source or the relay");
    }
    let mu1 = budget.config.mu1;
    let s = budget.tilde_source_signal();
    let r = budget.tilde_relay_signal();
    let (eta_s, eta_r) = (budget.tilde_eta_s, budget.tilde_eta_r);
    let p_ratio = budget.p_ratio();
    let coeffs = match protocol {
        Protocol::Fg => NormalizedSndr {
            a: (eta_r + r * eta_s * h1_gain / mu1) / m,
            lcoef: 1.0 / h2_gain + p_ratio / mu1,
            q: m / (mu1 * h2_gain),
            numerator_scale: s * r * h1_gain / (mu1 * m),
            eps_star: budget.eps_star,
        },
        Protocol::Vg => NormalizedSndr {
            a: (eta_r + r * eta_s) / m,
            lcoef: 1.0 / h2_gain + p_ratio / h1_gain,
            q: m / (h1_gain * h2_gain),
            numerator_scale: s * r / m,
            eps_star: budget.eps_star,
        },
    };
    Ok(coeffs)
}

/// Limit of the SNDR as `ε★ → 0` at fixed clip ratios.
pub fn asymptotic_sndr(protocol: Protocol, h1_gain: f64, budget: &LinkBudget) -> Result<f64> {
    if !(h1_gain >= 0.0) {
        return domain(format!("channel gain must be non-negative, got {h1_gain}"));
    }
    let (eta_s, eta_r) = (budget.tilde_eta_s, budget.tilde_eta_r);
    if eta_s == 0.0 && eta_r == 0.0 {
        return domain("without distortion the SNDR grows without bound");
    }
    let s = budget.tilde_source_signal();
    let r = budget.tilde_relay_signal();
    match protocol {
        Protocol::Fg => {
            if h1_gain == 0.0 {
                return Ok(0.0);
            }
            let mu1 = budget.config.mu1;
            Ok(s * r * h1_gain / ((eta_r + r * eta_s * h1_gain / mu1) * mu1))
        }
        Protocol::Vg => Ok(s * r / (eta_r + r * eta_s)),
    }
}
