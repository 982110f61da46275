//! Outage probabilities `P[λ ≤ γ_th]` under Rayleigh fading on both hops.
//!
//! Every expression here starts from the observation that source distortion
//! can be folded into an effective threshold: `λ ≤ γ` holds exactly when the
//! SNDR of a linear source of power `P_S` falls below
//! `γ' = γP_S / (σ_S²ζ_S² − γη_S)`. When that denominator is not positive
//! the distortion alone exceeds the signal and outage is certain.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::link_budget::{build_budget, LinkBudget, NetworkConfig, Protocol};
use crate::special_math::{integrate_semi_infinite_with, xk1_complement, QuadOptions, EULER_GAMMA};

/// Relative accuracy floor for the conditional-CDF quadrature. Absolute
/// tolerances far below `P_o` are relaxed to this.
const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_MAX_EVALS: usize = 300_000;
const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageMethod {
    ExactVg,
    QuadratureFg,
    QuadratureVg,
    Asymptotic,
    Floor,
    SmallGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutagePoint {
    pub gamma_th: f64,
    pub p_outage: f64,
    pub method: OutageMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityFit {
    /// Fitted `−d log P_o / d log P_S` over the top decade.
    pub slope: f64,
    /// Powers that entered the fit.
    pub power_grid: Vec<f64>,
    pub r_squared: f64,
}

/// Result of folding source distortion into the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveThreshold {
    Finite(f64),
    SureOutage,
}

fn check_gamma(gamma_th: f64) -> Result<()> {
    if gamma_th >= 0.0 {
        Ok(())
    } else {
        domain(format!("threshold must be non-negative, got {gamma_th}"))
    }
}

/// `γ' = γP_S / (σ_S²ζ_S² − γη_S)`, or certain outage when the denominator
/// is not positive.
pub fn gamma_map_source_distortion(gamma_th: f64, budget: &LinkBudget) -> EffectiveThreshold {
    if gamma_th == 0.0 {
        return EffectiveThreshold::Finite(0.0);
    }
    let margin = budget.source_signal_power() - gamma_th * budget.sel_s.eta;
    if margin <= 0.0 || gamma_th.is_infinite() {
        return EffectiveThreshold::SureOutage;
    }
    EffectiveThreshold::Finite(gamma_th * budget.config.p_s / margin)
}

/// Same map on the power-normalized quantities, independent of `P_S`.
fn gamma_map_normalized(gamma_th: f64, budget: &LinkBudget) -> Option<f64> {
    let margin = budget.tilde_source_signal() - gamma_th * budget.tilde_eta_s;
    (margin > 0.0 && gamma_th.is_finite()).then(|| gamma_th / margin)
}

fn point(gamma_th: f64, p_outage: f64, method: OutageMethod) -> OutagePoint {
    OutagePoint {
        gamma_th,
        p_outage: p_outage.clamp(0.0, 1.0),
        method,
    }
}

/// Closed-form VG outage:
/// `P_o = 1 − 2e^{−Q}√R·K₁(2√R)` with
/// `R = γ'(1 + Σ̄₂γ'/Σ̄_R)/(Σ̄₁Σ̄_R)` and `Q = γ'(1 + Σ̄₂/Σ̄₁)/Σ̄_R`,
/// and `P_o = 1` once `Σ̄_R ≤ 0`.
pub fn outage_vg(gamma_th: f64, budget: &LinkBudget) -> Result<OutagePoint> {
    check_gamma(gamma_th)?;
    let sure = point(gamma_th, 1.0, OutageMethod::ExactVg);
    let g = match gamma_map_source_distortion(gamma_th, budget) {
        EffectiveThreshold::SureOutage => return Ok(sure),
        EffectiveThreshold::Finite(g) => g,
    };
    if g == 0.0 {
        return Ok(point(gamma_th, 0.0, OutageMethod::ExactVg));
    }
    if budget.relay_signal_power() <= g * budget.sel_r.eta {
        return Ok(sure);
    }
    if budget.config.n0 == 0.0 {
        // Noise-free VG has a deterministic SNDR above the branch point.
        return Ok(point(gamma_th, 0.0, OutageMethod::ExactVg));
    }
    let sigma_r = budget.sigma_r_bar(g);
    if sigma_r <= 0.0 {
        return Ok(sure);
    }
    let (s1, s2) = (budget.sigma1_bar, budget.sigma2_bar);
    let r = g / (s1 * sigma_r) * (1.0 + s2 * g / sigma_r);
    let q = g / sigma_r * (1.0 + s2 / s1);
    // 1 − e^{−Q}(1 − δ) with δ = 1 − zK₁(z) keeps small outages accurate.
    let delta = xk1_complement(2.0 * r.sqrt())?;
    let p = -(-q).exp_m1() + (-q).exp() * delta;
    Ok(point(gamma_th, p, OutageMethod::ExactVg))
}

/// Conditional-CDF quadrature for either protocol.
///
/// Given `|h₁|² = x`, outage in `|h₂|²` is the exponential CDF at
/// `γN₀/A(x)`, where `A(x) = G²ζ_R²((σ_S²ζ_S² − γη_S)x − γN₀) − γη_R`, and
/// certain when `A(x) ≤ 0`. `A` changes sign once, at `x₀`, and factors as
/// `D·(x − x₀)/w(x)` with `w ≡ 1` for FG and `w(x) = P_S x + N₀` for VG.
/// Substituting `x = x₀ + μ₁u` gives
/// `P_o = 1 − e^{−x₀/μ₁} + e^{−x₀/μ₁}∫₀^∞ e^{−u}(1 − e^{−γN₀w/(Dμ₁μ₂u)}) du`.
pub fn outage_quadrature(
    protocol: Protocol,
    gamma_th: f64,
    budget: &LinkBudget,
    tol: f64,
) -> Result<OutagePoint> {
    check_gamma(gamma_th)?;
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let method = match protocol {
        Protocol::Fg => OutageMethod::QuadratureFg,
        Protocol::Vg => OutageMethod::QuadratureVg,
    };
    if gamma_th == 0.0 {
        return Ok(point(gamma_th, 0.0, method));
    }
    let c = &budget.config;
    let (mu1, mu2, n0, p_s) = (c.mu1, c.mu2, c.n0, c.p_s);
    let margin = budget.source_signal_power() - gamma_th * budget.sel_s.eta;
    if margin <= 0.0 || gamma_th.is_infinite() {
        return Ok(point(gamma_th, 1.0, method));
    }
    let eta_r = budget.sel_r.eta;
    let (slope, x0) = match protocol {
        Protocol::Fg => {
            let gz = budget.gain_sq(Protocol::Fg, mu1) * budget.sel_r.zeta * budget.sel_r.zeta;
            let k = gz * margin;
            (k, gamma_th * (gz * n0 + eta_r) / k)
        }
        Protocol::Vg => {
            let rel = budget.relay_signal_power();
            let d = rel * margin - gamma_th * eta_r * p_s;
            if d <= 0.0 {
                return Ok(point(gamma_th, 1.0, method));
            }
            (d, gamma_th * n0 * (rel + eta_r) / d)
        }
    };
    let head = -(-x0 / mu1).exp_m1();
    let weight = (-x0 / mu1).exp();
    if n0 == 0.0 || weight == 0.0 {
        return Ok(point(gamma_th, head, method));
    }
    let scale = gamma_th * n0 / (slope * mu1 * mu2);
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 1.0;
        }
        let w = match protocol {
            Protocol::Fg => 1.0,
            Protocol::Vg => p_s * (x0 + mu1 * u) + n0,
        };
        (-u).exp() * -(-scale * w / u).exp_m1()
    };
    let opts = QuadOptions {
        abs_tol: (tol / weight).min(1.0),
        rel_tol: QUAD_REL_TOL,
        max_evals: QUAD_MAX_EVALS,
    };
    let integral = integrate_semi_infinite_with(integrand, &opts)?;
    Ok(point(gamma_th, head + weight * integral.value, method))
}

/// FG outage by conditional-CDF quadrature, absolute error at most
/// `max(tol, 1e−10·P_o)`.
pub fn outage_fg(gamma_th: f64, budget: &LinkBudget, tol: f64) -> Result<OutagePoint> {
    outage_quadrature(Protocol::Fg, gamma_th, budget, tol)
}

/// Outage of either protocol by its preferred exact method.
pub fn outage(protocol: Protocol, gamma_th: f64, budget: &LinkBudget) -> Result<OutagePoint> {
    match protocol {
        Protocol::Vg => outage_vg(gamma_th, budget),
        Protocol::Fg => outage_fg(gamma_th, budget, UNDERFLOW),
    }
}

/// High-power FG floor `1 − exp(−η̃_Rγ / ((σ̃_S²ζ_S² − γη̃_S)σ̃_R²ζ_R²))`.
pub fn outage_fg_floor(gamma_th: f64, budget: &LinkBudget) -> Result<f64> {
    check_gamma(gamma_th)?;
    Ok(match gamma_map_normalized(gamma_th, budget) {
        None => 1.0,
        Some(g) => -(-budget.tilde_eta_r * g / budget.tilde_relay_signal()).exp_m1(),
    })
}

fn asymptotic_gamma(gamma_th: f64, budget: &LinkBudget) -> Result<f64> {
    check_gamma(gamma_th)?;
    match gamma_map_normalized(gamma_th, budget) {
        Some(g) if g > 0.0 => Ok(g),
        Some(_) => domain("asymptotic constants need a positive threshold"),
        None => domain(format!(
            "threshold {gamma_th} is at or above the source distortion limit"
        )),
    }
}

/// `g_FG = σ̃_R²ζ_R²μ₂ / (N₀γ') · exp(η̃_Rγ'/(σ̃_R²ζ_R²))`.
pub fn g_fg(gamma_th: f64, budget: &LinkBudget) -> Result<f64> {
    let g = asymptotic_gamma(gamma_th, budget)?;
    let r = budget.tilde_relay_signal();
    let c = &budget.config;
    Ok(r * c.mu2 / (c.n0 * g) * (budget.tilde_eta_r * g / r).exp())
}

/// `g_VG = (σ̃_R²ζ_R² − γ'η̃_R)μ₁μ₂ / (N₀γ'(μ₁ + P̃_Rμ₂))`.
pub fn g_vg(gamma_th: f64, budget: &LinkBudget) -> Result<f64> {
    let g = asymptotic_gamma(gamma_th, budget)?;
    let excess = budget.tilde_relay_signal() - g * budget.tilde_eta_r;
    if excess <= 0.0 {
        return domain(format!(
            "threshold {gamma_th} is at or above the VG distortion limit"
        ));
    }
    let c = &budget.config;
    Ok(excess * c.mu1 * c.mu2 / (c.n0 * g * (c.mu1 + budget.p_ratio() * c.mu2)))
}

/// First-order high-power expansions, one point per entry of `p_s_grid`:
/// FG `floor + log(P_S)/(g_FG P_S)`, VG `1/(g_VG P_S)`.
pub fn outage_asymptotic(
    protocol: Protocol,
    gamma_th: f64,
    p_s_grid: &[f64],
    cfg: &NetworkConfig,
) -> Result<Vec<OutagePoint>> {
    // The normalized constants do not depend on P_S.
    let budget = build_budget(*cfg)?;
    if cfg.n0 <= 0.0 {
        return domain("asymptotic expansions need N0 > 0");
    }
    let value: Box<dyn Fn(f64) -> f64> = match protocol {
        Protocol::Fg => {
            let g = g_fg(gamma_th, &budget)?;
            let floor = outage_fg_floor(gamma_th, &budget)?;
            Box::new(move |p: f64| floor + p.ln() / (g * p))
        }
        Protocol::Vg => {
            let g = g_vg(gamma_th, &budget)?;
            Box::new(move |p: f64| 1.0 / (g * p))
        }
    };
    p_s_grid
        .iter()
        .map(|&p| {
            if !(p > 0.0) || p.is_infinite() {
                return domain(format!(
                    "power grid entries must be positive and finite, got {p}"
                ));
            }
            Ok(OutagePoint {
                gamma_th,
                p_outage: value(p),
                method: OutageMethod::Asymptotic,
            })
        })
        .collect()
}

/// Slope of `−log P_o` against `log P_S` over the top decade of the grid.
pub fn diversity_fit(
    protocol: Protocol,
    gamma_th: f64,
    cfg: &NetworkConfig,
    p_s_grid: &[f64],
) -> Result<DiversityFit> {
    let (lo, hi) = p_s_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    if !(lo > 0.0) || hi.is_infinite() || hi < 1e3 * lo {
        return domain("power grid must be positive and span at least 3 decades");
    }
    let values = p_s_grid
        .par_iter()
        .map(|&p| -> Result<(f64, f64)> {
            let budget = build_budget(cfg.with_p_s(p))?;
            Ok((p, outage(protocol, gamma_th, &budget)?.p_outage))
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<(f64, f64)> = values
        .iter()
        .copied()
        .filter(|&(_, po)| po >= UNDERFLOW)
        .collect();
    if kept.len() < values.len() {
        warn!(
            "dropped {} grid points whose outage underflowed",
            values.len() - kept.len()
        );
    }
    let top = kept.iter().map(|&(p, _)| p).fold(0.0f64, f64::max);
    let fit: Vec<(f64, f64)> = kept
        .into_iter()
        .filter(|&(p, _)| p >= top / 10.0 * (1.0 - 1e-12))
        .map(|(p, po)| (p.ln(), po.ln()))
        .collect();
    if fit.len() < 2 {
        return domain("fewer than two usable points in the top decade of the grid");
    }
    let (slope, r_squared) = least_squares(&fit);
    Ok(DiversityFit {
        slope: -slope,
        power_grid: fit.iter().map(|&(x, _)| x.exp()).collect(),
        r_squared,
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, r2)
}

/// First-order expansion about `γ = 0`, with
/// `Z = N₀² / (σ_S²ζ_S²μ₁ · σ_R²ζ_R²μ₂)`:
///
/// * FG: `Zγ[Σ̄₂ + Σ̄₁μ₂/ε_R + (1+Σ̄₁)(1 − 2C − log(Zγ(1+Σ̄₁)))]`
/// * VG: `Zγ(1 − 2C + Σ̄₁ + Σ̄₂ − log(Zγ))`
pub fn small_gamma_expansion(
    protocol: Protocol,
    gamma_th: f64,
    budget: &LinkBudget,
) -> Result<f64> {
    if !(gamma_th > 0.0) || gamma_th.is_infinite() {
        return domain(format!(
            "expansion needs a positive finite threshold, got {gamma_th}"
        ));
    }
    let c = &budget.config;
    if c.n0 == 0.0 {
        return domain("expansion needs N0 > 0");
    }
    let z =
        c.n0 * c.n0 / (budget.source_signal_power() * c.mu1 * budget.relay_signal_power() * c.mu2);
    let zg = z * gamma_th;
    let (s1, s2) = (budget.sigma1_bar, budget.sigma2_bar);
    let value = match protocol {
        Protocol::Fg => {
            let relay_term = s1 * c.mu2 * budget.sel_r.eta / c.n0;
            zg * (s2 + relay_term + (1.0 + s1) * (1.0 - 2.0 * EULER_GAMMA - (zg * (1.0 + s1)).ln()))
        }
        Protocol::Vg => zg * (1.0 - 2.0 * EULER_GAMMA + s1 + s2 - zg.ln()),
    };
    if !(value > 0.0 && value < 1.0) {
        return domain(format!(
            "threshold {gamma_th} lies outside the small-threshold region"
        ));
    }
    Ok(value)
}
