//! Critical SNDR thresholds of the distortion-limited regime.
//!
//! As `ε★ = N₀ / max η_β → 0` the outage probability of each protocol
//! collapses to a step: it tends to one above a critical threshold and to a
//! small ordinate below it.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::link_budget::{LinkBudget, Protocol};
use crate::outage::outage;
use crate::special_math::to_db;

/// Critical threshold, `+∞` when the protocol has no transition.
///
/// * FG: `σ̃_S²ζ_S² / η̃_S`
/// * VG: `σ̃_S²ζ_S²σ̃_R²ζ_R² / (η̃_R + σ̃_R²ζ_R²η̃_S)`
pub fn threshold(protocol: Protocol, budget: &LinkBudget) -> f64 {
    let s = budget.tilde_source_signal();
    let r = budget.tilde_relay_signal();
    let (num, den) = match protocol {
        Protocol::Fg => (s, budget.tilde_eta_s),
        Protocol::Vg => (s * r, budget.tilde_eta_r + r * budget.tilde_eta_s),
    };
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// `γ_c^FG − γ_c^VG = σ̃_S²ζ_S²η̃_R / (η̃_Sη̃_R + σ̃_R²ζ_R²η̃_S²)`.
pub fn threshold_gap(budget: &LinkBudget) -> Result<f64> {
    let (eta_s, eta_r) = (budget.tilde_eta_s, budget.tilde_eta_r);
    if !(eta_s > 0.0) {
        return domain("the threshold gap needs source distortion");
    }
    let r = budget.tilde_relay_signal();
    Ok(budget.tilde_source_signal() * eta_r / (eta_s * eta_r + r * eta_s * eta_s))
}

fn out_of_regime(msg: String) -> Error {
    Error::OutOfRegime(msg)
}

/// Leading-order outage just below the critical threshold.
///
/// With `M̃ = max η̃_β`:
///
/// * FG: `(ε★M̃/(η̃_Sσ̃_R²ζ_R²μ₂))·(μ₂/ε_R + log(η̃_Sσ̃_R²ζ_R²μ₂/(ε★M̃)))`
/// * VG: `(ε★²M̃/(a μ₁μ₂))·log(a μ₁μ₂/(ε★²M̃))`, `a = (η̃_R + σ̃_R²ζ_R²η̃_S)/M̃`
pub fn ordinate(protocol: Protocol, budget: &LinkBudget) -> Result<f64> {
    let m = budget.max_tilde_eta();
    let eps = budget.eps_star;
    if !(m > 0.0) || !eps.is_finite() {
        return domain("ordinates need a distortion-limited network");
    }
    let c = &budget.config;
    let r = budget.tilde_relay_signal();
    let value = match protocol {
        Protocol::Fg => {
            let eta_s = budget.tilde_eta_s;
            if !(eta_s > 0.0) {
                return domain("the FG ordinate needs source distortion");
            }
            let arg = eta_s * r * c.mu2 / (eps * m);
            if !(arg > 1.0) {
                return Err(out_of_regime(format!("log argument {arg} not above 1")));
            }
            let relay = if budget.eps_r.is_finite() {
                c.mu2 / budget.eps_r
            } else {
                0.0
            };
            (relay + arg.ln()) / arg
        }
        Protocol::Vg => {
            let a = (budget.tilde_eta_r + r * budget.tilde_eta_s) / m;
            let arg = a * c.mu1 * c.mu2 / (eps * eps * m);
            if !(arg > 1.0) {
                return Err(out_of_regime(format!("log argument {arg} not above 1")));
            }
            arg.ln() / arg
        }
    };
    if value > 1.0 {
        return Err(out_of_regime(format!(
            "leading-order ordinate {value} exceeds one"
        )));
    }
    Ok(value)
}

/// Upper bound on how much FG can beat VG between the two thresholds:
/// `1 − exp(−η̃_Rγ_c^VG / ((σ̃_S²ζ_S² − γη̃_S)σ̃_R²ζ_R²))`.
pub fn fg_advantage_factor(gamma_th: f64, budget: &LinkBudget) -> Result<f64> {
    let vg = threshold(Protocol::Vg, budget);
    let fg = threshold(Protocol::Fg, budget);
    if !(gamma_th > vg && gamma_th < fg) {
        return domain(format!(
            "threshold {gamma_th} is outside the open interval ({vg}, {fg})"
        ));
    }
    let margin = budget.tilde_source_signal() - gamma_th * budget.tilde_eta_s;
    Ok(-(-budget.tilde_eta_r * vg / (margin * budget.tilde_relay_signal())).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolTransition {
    pub protocol: Protocol,
    /// Absent when the protocol has no transition.
    pub gamma_crit: Option<f64>,
    pub gamma_crit_db: Option<f64>,
    pub ordinate: Option<f64>,
    /// Exact outage evaluated at the critical threshold itself.
    pub outage_at_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FgAdvantage {
    /// Geometric mean of the two thresholds.
    pub gamma_th: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTransitionReport {
    pub phase_transition: bool,
    pub eps_star: Option<f64>,
    pub eps_s: Option<f64>,
    pub eps_r: Option<f64>,
    pub threshold_gap: Option<f64>,
    pub fg_advantage: Option<FgAdvantage>,
    pub protocols: Vec<ProtocolTransition>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Aggregate thresholds, ordinates and comparison quantities for both
/// protocols. Quantities that are undefined for the network are absent.
pub fn report(budget: &LinkBudget) -> PhaseTransitionReport {
    let protocols: Vec<ProtocolTransition> = Protocol::ALL
        .iter()
        .map(|&protocol| {
            let gamma_crit = finite(threshold(protocol, budget));
            ProtocolTransition {
                protocol,
                gamma_crit,
                gamma_crit_db: gamma_crit.map(to_db),
                ordinate: gamma_crit.and_then(|_| ordinate(protocol, budget).ok()),
                outage_at_threshold: gamma_crit
                    .and_then(|g| outage(protocol, g, budget).ok())
                    .map(|p| p.p_outage),
            }
        })
        .collect();
    let fg_advantage = match (
        threshold(Protocol::Vg, budget),
        threshold(Protocol::Fg, budget),
    ) {
        (vg, fg) if vg.is_finite() && fg.is_finite() && vg < fg => {
            let gamma_th = (vg * fg).sqrt();
            fg_advantage_factor(gamma_th, budget)
                .ok()
                .map(|factor| FgAdvantage { gamma_th, factor })
        }
        _ => None,
    };
    PhaseTransitionReport {
        phase_transition: protocols.iter().any(|p| p.gamma_crit.is_some()),
        eps_star: finite(budget.eps_star),
        eps_s: finite(budget.eps_s),
        eps_r: finite(budget.eps_r),
        threshold_gap: threshold_gap(budget).ok(),
        fg_advantage,
        protocols,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_budget::{build_budget, NetworkConfig};
    use crate::outage::{outage_fg_floor, outage_vg};
    use proptest::prelude::*;

    // Evaluated independently at 30 digits from the Bussgang triple.
    const BOTH_FG: f64 = 1_907.188_685_119_596;
    const BOTH_VG: f64 = 1_844.246_193_599_667;
    const BOTH_GAP: f64 = 62.942_491_519_928_29;

    fn budget(rs: f64, rr: f64, snr_db: f64) -> LinkBudget {
        build_budget(
            NetworkConfig {
                clip_ratio_s: rs,
                clip_ratio_r: rr,
                ..NetworkConfig::default()
            }
            .with_snr_db(snr_db),
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn both_clipped_thresholds() {
        let b = budget(5.0, 8.0, 40.0);
        assert!(rel(threshold(Protocol::Fg, &b), BOTH_FG) < 1e-10);
        assert!(rel(threshold(Protocol::Vg, &b), BOTH_VG) < 1e-10);
        assert!((to_db(threshold(Protocol::Fg, &b)) - 32.803_936_62).abs() < 1e-6);
        assert!((to_db(threshold(Protocol::Vg, &b)) - 32.658_188_96).abs() < 1e-6);
    }

    #[test]
    fn relay_only_thresholds() {
        let b = budget(f64::INFINITY, 5.0, 40.0);
        assert_eq!(threshold(Protocol::Fg, &b), f64::INFINITY);
        // Relay at r = 5 plays the role the source plays when both clip.
        assert!(rel(threshold(Protocol::Vg, &b), BOTH_FG) < 1e-10);
    }

    #[test]
    fn thresholds_independent_of_power() {
        for snr in [0.0, 35.0, 90.0] {
            let b = budget(5.0, 8.0, snr);
            assert!(rel(threshold(Protocol::Vg, &b), BOTH_VG) < 1e-10);
        }
    }

    #[test]
    fn linear_relay_equalizes_thresholds() {
        let b = budget(3.0, f64::INFINITY, 30.0);
        assert_eq!(threshold(Protocol::Fg, &b), threshold(Protocol::Vg, &b));
        assert_eq!(threshold_gap(&b).unwrap(), 0.0);
    }

    #[test]
    fn gap_examples() {
        let b = budget(5.0, 8.0, 30.0);
        let gap = threshold_gap(&b).unwrap();
        assert!(rel(gap, BOTH_GAP) < 1e-9);
        let diff = threshold(Protocol::Fg, &b) - threshold(Protocol::Vg, &b);
        assert!(rel(gap, diff) < 1e-10);
        assert!(threshold_gap(&budget(f64::INFINITY, 5.0, 30.0)).is_err());
    }

    #[test]
    fn vg_ordinate_scaling() {
        let b = budget(5.0, 8.0, 0.0);
        let eps = [1e-2, 1e-3, 1e-4];
        let ords: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let snr = b.max_tilde_eta().recip() / e;
                ordinate(Protocol::Vg, &budget(5.0, 8.0, to_db(snr))).unwrap()
            })
            .collect();
        for w in ords.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 60.0 && ratio < 100.0, "{ratio}");
        }
    }

    #[test]
    fn fg_ordinate_scaling() {
        // Linear relay: ε★·log(1/ε★).
        let lin = |snr: f64| ordinate(Protocol::Fg, &budget(5.0, f64::INFINITY, snr)).unwrap();
        let ratio = lin(60.0) / lin(70.0);
        assert!(ratio > 7.0 && ratio < 10.0, "{ratio}");
        // Clipping relay: approaches a constant.
        let clip = |snr: f64| ordinate(Protocol::Fg, &budget(5.0, 5.5, snr)).unwrap();
        assert!(rel(clip(60.0), clip(80.0)) < 0.05);
    }

    #[test]
    fn ordinate_out_of_regime() {
        let b = budget(5.0, 8.0, -20.0);
        assert!(matches!(
            ordinate(Protocol::Vg, &b),
            Err(Error::OutOfRegime(_))
        ));
        assert!(ordinate(Protocol::Vg, &budget(f64::INFINITY, f64::INFINITY, 10.0)).is_err());
    }

    #[test]
    fn vg_outage_collapses_across_threshold() {
        let gc = BOTH_VG;
        for snr in [40.0, 60.0, 80.0] {
            let b = budget(5.0, 8.0, snr);
            assert!(outage_vg(1.05 * gc, &b).unwrap().p_outage > 0.99);
        }
        let below: Vec<f64> = [40.0, 60.0, 80.0]
            .iter()
            .map(|&s| outage_vg(0.95 * gc, &budget(5.0, 8.0, s)).unwrap().p_outage)
            .collect();
        assert!(below[0] > below[1] && below[1] > below[2]);
    }

    #[test]
    fn advantage_factor() {
        let b = budget(5.0, 8.0, 60.0);
        assert!(fg_advantage_factor(BOTH_VG * 0.99, &b).is_err());
        assert!(fg_advantage_factor(BOTH_FG, &b).is_err());
        let just_above = BOTH_VG * (1.0 + 1e-6);
        let f = fg_advantage_factor(just_above, &b).unwrap();
        assert!(f > 0.0 && f < 1.0);
        // The bound and the FG floor share the exponent up to γ vs γ_c^VG.
        let floor = outage_fg_floor(just_above, &b).unwrap();
        assert!(rel(f, floor) < 1e-5);
        let g = fg_advantage_factor(BOTH_VG * 1.02, &b).unwrap();
        assert!(g > f);
    }

    #[test]
    fn report_shapes() {
        let lin = report(&budget(f64::INFINITY, f64::INFINITY, 30.0));
        assert!(!lin.phase_transition);
        assert!(lin.protocols.iter().all(|p| p.gamma_crit.is_none()));
        assert!(lin.eps_star.is_none());

        let relay_only = report(&budget(f64::INFINITY, 5.0, 30.0));
        assert!(relay_only.phase_transition);
        assert!(relay_only.protocols[0].gamma_crit.is_none());
        assert!(relay_only.protocols[1].gamma_crit.is_some());

        let both = report(&budget(5.0, 8.0, 60.0));
        assert!(both.fg_advantage.is_some());
        assert!(rel(both.protocols[0].gamma_crit.unwrap(), BOTH_FG) < 1e-10);
        assert_eq!(both.protocols[1].outage_at_threshold, Some(1.0));
    }

    proptest! {
        #[test]
        fn vg_threshold_never_above_fg(
            rs in 0.2f64..12.0,
            rr in 0.2f64..12.0,
            p_ratio in 0.05f64..20.0,
            snr in -10.0f64..90.0,
        ) {
            let b = build_budget(NetworkConfig {
                clip_ratio_s: rs,
                clip_ratio_r: rr,
                p_ratio,
                ..NetworkConfig::default()
            }.with_snr_db(snr)).unwrap();
            let (fg, vg) = (threshold(Protocol::Fg, &b), threshold(Protocol::Vg, &b));
            prop_assert!(vg <= fg * (1.0 + 1e-12));
            let gap = threshold_gap(&b).unwrap();
            prop_assert!(gap >= 0.0);
            prop_assert!((gap - (fg - vg)).abs() <= 1e-9 * fg);
        }
    }
}
