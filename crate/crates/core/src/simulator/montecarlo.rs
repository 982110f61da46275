//! Estimators driven by the channel and waveform simulators.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use super::channel::{gen_channel, ChannelMode, ChannelRealization};
use super::waveform::WaveformChain;
use super::{CompensatedSum, ComplexSum, Seed, SimStats, TRIALS_PER_STREAM};
use crate::bussgang::{clip, sel_params};
use crate::error::{domain, Result};
use crate::link_budget::{sndr_unchecked, LinkBudget, Protocol};

/// Blocks handled by one RNG stream in [`measure_sndr`].
const BLOCKS_PER_STREAM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BussgangEstimate {
    /// Real part of the least-squares gain `⟨y, x⟩ / ⟨x, x⟩`.
    pub zeta_hat: f64,
    /// Mean power of the residual `y − ζ̂x`.
    pub eta_hat: f64,
    /// `|⟨y − ζ̂x, x⟩| / (‖y − ζ̂x‖‖x‖)`, zero up to rounding.
    pub resid_corr: f64,
}

/// Project `output` onto `input` and characterize the residual.
pub fn estimate_bussgang(input: &[Complex64], output: &[Complex64]) -> Result<BussgangEstimate> {
    if input.len() != output.len() || input.len() < 2 {
        return domain("input and output need equal lengths of at least 2");
    }
    let mut xx = CompensatedSum::default();
    let mut yx = ComplexSum::default();
    for (x, y) in input.iter().zip(output) {
        xx.add(x.norm_sqr());
        yx.add(y * x.conj());
    }
    let xx = xx.value();
    if !(xx > 0.0) {
        return domain("input has zero power");
    }
    let zeta = yx.value() / xx;
    let mut rr = CompensatedSum::default();
    let mut rx = ComplexSum::default();
    for (x, y) in input.iter().zip(output) {
        let r = y - zeta * x;
        rr.add(r.norm_sqr());
        rx.add(r * x.conj());
    }
    let rr = rr.value();
    let resid_corr = if rr > 0.0 {
        rx.value().norm() / (rr * xx).sqrt()
    } else {
        0.0
    };
    Ok(BussgangEstimate {
        zeta_hat: zeta.re,
        eta_hat: rr / input.len() as f64,
        resid_corr,
    })
}

fn check_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.iter().all(|g| *g >= 0.0) {
        Ok(())
    } else {
        domain("thresholds must be non-negative")
    }
}

fn counts_to_stats(counts: &[u64], n: u64) -> Vec<SimStats> {
    counts
        .iter()
        .map(|&k| SimStats::from_counts(k, n))
        .collect()
}

/// Count, for each threshold, how many of the samples are at or below it.
fn count_below(mut samples: Vec<f64>, gammas: &[f64]) -> Vec<u64> {
    samples.sort_by(f64::total_cmp);
    gammas
        .iter()
        .map(|&g| samples.partition_point(|&v| v <= g) as u64)
        .collect()
}

fn sum_counts(parts: Vec<Vec<u64>>, width: usize) -> Vec<u64> {
    parts.into_iter().fold(vec![0; width], |mut acc, part| {
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
        acc
    })
}

/// Samples per RNG stream in [`sample_bussgang`].
const SAMPLES_PER_STREAM: usize = 1 << 16;

/// Bussgang estimate for `n_samples` complex Gaussian samples of variance
/// `sigma_sq` passed through a limiter with saturation power `p_max`.
///
/// The squared magnitudes are stratified: sample `i` draws its exponential
/// quantile uniformly from the `i`-th of `n_samples` equiprobable strata,
/// and its phase is uniform. Each sample is still marginally complex
/// Gaussian, but the number of samples beyond the clip level is fixed, which
/// removes most of the sampling noise from the tiny distortion power at
/// large clip ratios.
pub fn sample_bussgang(
    sigma_sq: f64,
    p_max: f64,
    n_samples: usize,
    seed: Seed,
) -> Result<BussgangEstimate> {
    sel_params(sigma_sq, p_max)?;
    let amp = p_max.sqrt();
    let n = n_samples as f64;
    let streams = n_samples.div_ceil(SAMPLES_PER_STREAM);
    let chunks: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.stream(s as u64);
            let first = s * SAMPLES_PER_STREAM;
            let last = n_samples.min(first + SAMPLES_PER_STREAM);
            let x: Vec<Complex64> = (first..last)
                .map(|i| {
                    // Upper-tail probability in ((N-i-1)/N, (N-i)/N].
                    let tail = ((n_samples - i) as f64 - rng.random::<f64>()) / n;
                    let radius = (-sigma_sq * tail.ln()).sqrt();
                    Complex64::from_polar(radius, std::f64::consts::TAU * rng.random::<f64>())
                })
                .collect();
            let y = x.iter().map(|&v| clip(v, amp)).collect();
            (x, y)
        })
        .collect();
    let (x, y): (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) = chunks.into_iter().unzip();
    estimate_bussgang(&x.concat(), &y.concat())
}

/// Channel-level outage estimate at several thresholds from one set of
/// draws, so the estimates are coupled and nondecreasing in `γ`.
pub fn mc_outage_sweep(
    protocol: Protocol,
    gammas: &[f64],
    budget: &LinkBudget,
    n_trials: u64,
    seed: Seed,
) -> Result<Vec<SimStats>> {
    check_gammas(gammas)?;
    if n_trials == 0 {
        return domain("need at least one trial");
    }
    let (mu1, mu2) = (budget.config.mu1, budget.config.mu2);
    let streams = n_trials.div_ceil(TRIALS_PER_STREAM);
    let parts: Vec<Vec<u64>> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.stream(s);
            let len = TRIALS_PER_STREAM.min(n_trials - s * TRIALS_PER_STREAM);
            let lambdas = (0..len)
                .map(|_| {
                    let x: f64 = Exp1.sample(&mut rng);
                    let y: f64 = Exp1.sample(&mut rng);
                    sndr_unchecked(protocol, mu1 * x, mu2 * y, budget)
                })
                .collect();
            count_below(lambdas, gammas)
        })
        .collect();
    Ok(counts_to_stats(&sum_counts(parts, gammas.len()), n_trials))
}

/// Channel-level outage estimate with a 95% Wilson interval.
pub fn mc_outage(
    protocol: Protocol,
    gamma_th: f64,
    budget: &LinkBudget,
    n_trials: u64,
    seed: Seed,
) -> Result<SimStats> {
    Ok(mc_outage_sweep(protocol, &[gamma_th], budget, n_trials, seed)?[0])
}

/// Approximate relative standard error of a measured SNDR `λ̂` from
/// `blocks` blocks: `√((1 + 2/λ)/B)`.
pub fn sndr_relative_std_error(lambda: f64, blocks: usize) -> f64 {
    ((1.0 + 2.0 / lambda) / blocks as f64).sqrt()
}

/// Analytic SNDR of every subcarrier of a fixed channel.
pub fn predicted_sndr(
    channel: &ChannelRealization,
    budget: &LinkBudget,
    protocol: Protocol,
) -> Vec<f64> {
    (0..channel.n_subcarriers())
        .map(|k| sndr_unchecked(protocol, channel.gain_h1(k), channel.gain_h2(k), budget))
        .collect()
}

#[derive(Clone)]
struct Projection {
    yx: Vec<ComplexSum>,
    xx: Vec<CompensatedSum>,
    yy: Vec<CompensatedSum>,
}

impl Projection {
    fn new(n: usize) -> Self {
        Self {
            yx: vec![ComplexSum::default(); n],
            xx: vec![CompensatedSum::default(); n],
            yy: vec![CompensatedSum::default(); n],
        }
    }

    fn add_block(&mut self, x: &[Complex64], y: &[Complex64]) {
        for k in 0..x.len() {
            self.yx[k].add(y[k] * x[k].conj());
            self.xx[k].add(x[k].norm_sqr());
            self.yy[k].add(y[k].norm_sqr());
        }
    }

    fn merge(&mut self, other: &Projection) {
        for k in 0..self.xx.len() {
            self.yx[k].add(other.yx[k].value());
            self.xx[k].add(other.xx[k].value());
            self.yy[k].add(other.yy[k].value());
        }
    }

    /// `|α|²·mean|x|² / residual power`, residual with `B − 1` dof.
    ///
    /// `|α̂|²` overestimates `|α|²` by `residual/Σ|x|²`; that bias is removed
    /// so weak subcarriers are not pushed upwards. The estimate is floored at
    /// zero.
    fn sndr(&self, k: usize, blocks: usize) -> f64 {
        let (yx, xx, yy) = (self.yx[k].value(), self.xx[k].value(), self.yy[k].value());
        let resid = (yy - yx.norm_sqr() / xx).max(0.0) / (blocks - 1) as f64;
        let alpha_sq = (yx.norm_sqr() / (xx * xx) - resid / xx).max(0.0);
        alpha_sq * xx / blocks as f64 / resid
    }
}

/// Per-subcarrier SNDR measured over `n_blocks` random blocks by projecting
/// the received symbol onto the transmitted one.
pub fn measure_sndr(
    channel: &ChannelRealization,
    budget: &LinkBudget,
    protocol: Protocol,
    n_blocks: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    if n_blocks < 100 {
        return domain(format!("need at least 100 blocks, got {n_blocks}"));
    }
    let chain = WaveformChain::new(protocol, channel, budget)?;
    let n = channel.n_subcarriers();
    let streams = n_blocks.div_ceil(BLOCKS_PER_STREAM);
    let parts: Vec<Projection> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.stream(s as u64);
            let mut acc = Projection::new(n);
            let len = BLOCKS_PER_STREAM.min(n_blocks - s * BLOCKS_PER_STREAM);
            for _ in 0..len {
                let blk = chain.run(&mut rng);
                acc.add_block(&blk.x_s, &blk.y_d);
            }
            acc
        })
        .collect();
    let mut total = Projection::new(n);
    for p in &parts {
        total.merge(p);
    }
    Ok((0..n).map(|k| total.sndr(k, n_blocks)).collect())
}

/// Outage of the SNDR measured on the waveform chain.
///
/// Each draw uses its own stream: a fresh channel, one uniformly chosen
/// subcarrier, and `blocks_per_draw` blocks to measure that subcarrier's
/// SNDR. All thresholds share the draws.
pub fn waveform_outage(
    protocol: Protocol,
    gammas: &[f64],
    budget: &LinkBudget,
    mode: ChannelMode,
    n_draws: u64,
    blocks_per_draw: usize,
    seed: Seed,
) -> Result<Vec<SimStats>> {
    check_gammas(gammas)?;
    if n_draws == 0 || blocks_per_draw < 2 {
        return domain("need at least one draw and two blocks per draw");
    }
    let c = &budget.config;
    let lambdas = (0..n_draws)
        .into_par_iter()
        .map(|d| -> Result<f64> {
            let mut rng = seed.stream(d);
            let channel = gen_channel(c.n_taps, c.n_subcarriers, c.mu1, c.mu2, mode, &mut rng)?;
            let k = rng.random_range(0..c.n_subcarriers);
            let chain = WaveformChain::new(protocol, &channel, budget)?;
            let mut acc = Projection::new(1);
            for _ in 0..blocks_per_draw {
                let blk = chain.run(&mut rng);
                acc.add_block(&blk.x_s[k..=k], &blk.y_d[k..=k]);
            }
            Ok(acc.sndr(0, blocks_per_draw))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(counts_to_stats(&count_below(lambdas, gammas), n_draws))
}

/// Coefficient of variation of the FG relay's limiter input power across
/// channel realizations, each measured over one block.
///
/// A fixed-gain relay sets its limiter for the average received power; with
/// few taps the per-block power fluctuates with the channel and the
/// Bussgang model of the relay stops being stationary.
pub fn fg_stationarity_check(
    l: usize,
    budget: &LinkBudget,
    n_realizations: u64,
    seed: Seed,
) -> Result<f64> {
    if n_realizations < 2 {
        return domain("need at least two realizations");
    }
    let c = &budget.config;
    let powers = (0..n_realizations)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = seed.stream(r);
            let channel = gen_channel(
                l,
                c.n_subcarriers,
                c.mu1,
                c.mu2,
                ChannelMode::Statistical,
                &mut rng,
            )?;
            let chain = WaveformChain::new(Protocol::Fg, &channel, budget)?;
            Ok(chain.run(&mut rng).relay_input_power)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = powers.len() as f64;
    let mut sum = CompensatedSum::default();
    powers.iter().for_each(|&p| sum.add(p));
    let mean = sum.value() / n;
    let mut sq = CompensatedSum::default();
    powers.iter().for_each(|&p| sq.add((p - mean) * (p - mean)));
    Ok((sq.value() / (n - 1.0)).sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bussgang::sel_apply;
    use crate::link_budget::{build_budget, NetworkConfig};
    use crate::outage::{outage_fg, outage_vg};
    use crate::simulator::channel::complex_gaussian;

    fn budget(rs: f64, rr: f64, snr_db: f64, l: usize, n: usize) -> LinkBudget {
        build_budget(
            NetworkConfig {
                clip_ratio_s: rs,
                clip_ratio_r: rr,
                n_taps: l,
                n_subcarriers: n,
                ..NetworkConfig::default()
            }
            .with_snr_db(snr_db),
        )
        .unwrap()
    }

    #[test]
    fn bussgang_identity_and_scaling() {
        let mut rng = Seed(1).stream(0);
        let x: Vec<Complex64> = (0..1000).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let e = estimate_bussgang(&x, &x).unwrap();
        assert_eq!((e.zeta_hat, e.eta_hat), (1.0, 0.0));
        let half: Vec<Complex64> = x.iter().map(|v| v * 0.5).collect();
        let e = estimate_bussgang(&x, &half).unwrap();
        assert_eq!(e.zeta_hat, 0.5);
        assert!(e.eta_hat < 1e-30);
        assert!(estimate_bussgang(&[Complex64::new(0.0, 0.0); 4], &x[..4]).is_err());
        assert!(estimate_bussgang(&x[..3], &x[..4]).is_err());
    }

    #[test]
    fn bussgang_matches_closed_form() {
        let mut rng = Seed(2).stream(0);
        let n = 1 << 20;
        let x: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let y: Vec<Complex64> = x.iter().map(|&v| sel_apply(v, 5.0).unwrap()).collect();
        let e = estimate_bussgang(&x, &y).unwrap();
        let p = sel_params(1.0, 5.0).unwrap();
        assert!((e.zeta_hat - p.zeta).abs() < 1e-3);
        assert!((e.eta_hat / p.eta - 1.0).abs() < 0.05);
        assert!(e.resid_corr < 1e-12, "{}", e.resid_corr);
        let sampled = sample_bussgang(2.0, 6.0, 100_000, Seed(2)).unwrap();
        let p = sel_params(2.0, 6.0).unwrap();
        assert!((sampled.zeta_hat - p.zeta).abs() < 5e-3);
        assert_eq!(
            sampled,
            sample_bussgang(2.0, 6.0, 100_000, Seed(2)).unwrap()
        );
        assert!(sample_bussgang(1.0, -1.0, 10, Seed(2)).is_err());
    }

    #[test]
    fn mc_edge_cases() {
        let b = budget(5.0, 8.0, 60.0, 32, 512);
        let s = mc_outage(Protocol::Vg, 0.0, &b, 10_000, Seed(3)).unwrap();
        assert_eq!(s.n_outages, 0);
        let s = mc_outage(Protocol::Vg, 1e6, &b, 10_000, Seed(3)).unwrap();
        assert_eq!(s.p_hat, 1.0);
        assert!(mc_outage(Protocol::Vg, 1.0, &b, 0, Seed(3)).is_err());
    }

    #[test]
    fn mc_sweep_is_monotone_and_deterministic() {
        let b = budget(5.0, 8.0, 20.0, 32, 512);
        let gammas: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let a = mc_outage_sweep(Protocol::Fg, &gammas, &b, 50_000, Seed(4)).unwrap();
        let again = mc_outage_sweep(Protocol::Fg, &gammas, &b, 50_000, Seed(4)).unwrap();
        assert_eq!(a, again);
        assert!(a.windows(2).all(|w| w[0].n_outages <= w[1].n_outages));
        let single = mc_outage(Protocol::Fg, gammas[7], &b, 50_000, Seed(4)).unwrap();
        assert_eq!(single, a[7]);
    }

    #[test]
    fn mc_thread_count_invariance() {
        let b = budget(5.0, 8.0, 20.0, 32, 512);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    mc_outage_sweep(Protocol::Vg, &[1.0, 5.0], &b, 30_000, Seed(5)).unwrap()
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn mc_interval_coverage() {
        // 100 independent runs: the Wilson interval should cover the exact
        // value in at least 93 of them.
        let b = budget(5.0, 8.0, 15.0, 32, 512);
        let exact = outage_vg(3.0, &b).unwrap().p_outage;
        let covered = (0..100)
            .filter(|&s| {
                mc_outage(Protocol::Vg, 3.0, &b, 20_000, Seed(1000 + s))
                    .unwrap()
                    .covers(exact)
            })
            .count();
        assert!(covered >= 93, "{covered}");
    }

    #[test]
    fn linear_sndr_matches_prediction() {
        let b = budget(f64::INFINITY, f64::INFINITY, 15.0, 4, 64);
        let mut rng = Seed(6).stream(0);
        let ch = gen_channel(4, 64, 1.0, 1.0, ChannelMode::Statistical, &mut rng).unwrap();
        for p in Protocol::ALL {
            let measured = measure_sndr(&ch, &b, p, 10_000, Seed(7)).unwrap();
            let predicted = predicted_sndr(&ch, &b, p);
            for (k, (m, q)) in measured.iter().zip(&predicted).enumerate() {
                let se = sndr_relative_std_error(*q, 10_000);
                assert!(
                    (m / q - 1.0).abs() < 0.05 + 3.0 * se,
                    "{p} k={k}: {m} vs {q}"
                );
            }
        }
    }

    #[test]
    fn measure_sndr_needs_blocks() {
        let b = budget(5.0, 8.0, 15.0, 4, 64);
        let mut rng = Seed(8).stream(0);
        let ch = gen_channel(4, 64, 1.0, 1.0, ChannelMode::Statistical, &mut rng).unwrap();
        assert!(measure_sndr(&ch, &b, Protocol::Fg, 99, Seed(0)).is_err());
    }

    #[test]
    fn waveform_outage_matches_closed_form_small() {
        let b = budget(5.0, 8.0, 20.0, 4, 64);
        let gammas = [2.0, 10.0];
        for p in Protocol::ALL {
            let stats =
                waveform_outage(p, &gammas, &b, ChannelMode::Statistical, 2000, 100, Seed(9))
                    .unwrap();
            for (s, &g) in stats.iter().zip(&gammas) {
                let exact = match p {
                    Protocol::Vg => outage_vg(g, &b).unwrap().p_outage,
                    Protocol::Fg => outage_fg(g, &b, 1e-12).unwrap().p_outage,
                };
                // Wider than the CI: 2000 draws and 100-block SNDR estimates.
                let sd = (exact * (1.0 - exact) / 2000.0).sqrt();
                assert!(
                    (s.p_hat - exact).abs() < 4.0 * sd + 0.01,
                    "{p} γ={g}: {} vs {exact}",
                    s.p_hat
                );
            }
        }
    }

    #[test]
    fn stationarity_improves_with_taps() {
        let b = budget(5.0, 8.0, 20.0, 1, 128);
        let cv1 = fg_stationarity_check(1, &b, 4000, Seed(10)).unwrap();
        let expected = b.config.p_s * b.config.mu1 / (b.config.p_s * b.config.mu1 + b.config.n0);
        assert!((cv1 / expected - 1.0).abs() < 0.1, "{cv1} vs {expected}");
        let cv16 = fg_stationarity_check(16, &b, 4000, Seed(10)).unwrap();
        assert!(cv1 > 3.0 * cv16, "{cv1} vs {cv16}");
        let cvn = fg_stationarity_check(128, &b, 500, Seed(10)).unwrap();
        assert!(cvn < cv16);
    }
}
