//! Adaptive Gauss–Kronrod quadrature on `[0, ∞)`.
//!
//! The half line is mapped onto `(0, 1]` with `x = t / (1 − t)` and the
//! transformed integrand `f(t/(1−t)) / (1−t)²` is integrated by global
//! adaptive bisection with the 7/15-point Gauss–Kronrod pair. The interval
//! with the largest error estimate is always split next.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Stopping rule: converged once the summed error estimate is at most
/// `max(abs_tol, rel_tol·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_evals: 150_000,
        }
    }
}

/// Integrate `f` over `[0, ∞)` to absolute tolerance `tol`.
pub fn integrate_semi_infinite<F>(f: F, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    integrate_semi_infinite_with(
        f,
        &QuadOptions {
            abs_tol: tol,
            ..QuadOptions::default()
        },
    )
}

pub fn integrate_semi_infinite_with<F>(f: F, opts: &QuadOptions) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if !(opts.abs_tol > 0.0 || opts.rel_tol > 0.0) {
        return domain("quadrature tolerance must be positive");
    }
    let mapped = |t: f64| {
        let s = 1.0 - t;
        f(t / s) / (s * s)
    };

    let mut evaluations = 0;
    let first = Segment::new(&mapped, 0.0, 1.0, &mut evaluations);
    let mut total = first.value;
    let mut total_err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return Ok(QuadratureResult {
                value: total,
                abs_error: total_err,
                evaluations,
            });
        }
        if evaluations + 30 > opts.max_evals {
            return Err(Error::Convergence {
                estimate: total,
                abs_error: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            return Err(Error::Convergence {
                estimate: total,
                abs_error: total_err,
                evaluations,
            });
        }
        let left = Segment::new(&mapped, worst.a, mid, &mut evaluations);
        let right = Segment::new(&mapped, mid, worst.b, &mut evaluations);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically so the running totals do not drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl Segment {
    fn new<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, evaluations: &mut usize) -> Self {
        let (value, err) = gauss_kronrod_15(g, a, b);
        *evaluations += 15;
        Self { a, b, value, err }
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7/K15 panel with the QUADPACK error rescaling.
fn gauss_kronrod_15<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = g(center);
    let mut res_k = f_center * WGK[7];
    let mut res_g = f_center * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let (f1, f2) = (g(center - x), g(center + x));
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;

    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite trapezoid on [0, L] with a fine uniform grid; the tail beyond
    /// L is below 1e-15 for the test integrands.
    fn trapezoid_oracle<F: Fn(f64) -> f64>(f: F, upper: f64, steps: usize) -> f64 {
        let h = upper / steps as f64;
        let mut sum = 0.5 * (f(0.0) + f(upper));
        for i in 1..steps {
            sum += f(i as f64 * h);
        }
        sum * h
    }

    #[test]
    fn exponential() {
        let r = integrate_semi_infinite(|x| (-x).exp(), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.abs_error >= (r.value - 1.0).abs());
        assert!(r.evaluations >= 1);
    }

    #[test]
    fn gamma_two() {
        let r = integrate_semi_infinite(|x| x * (-x).exp(), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.abs_error >= (r.value - 1.0).abs());
    }

    #[test]
    fn exp_over_one_plus_x() {
        let f = |x: f64| (-x).exp() / (1.0 + x);
        // Trapezoid oracle with Richardson extrapolation on [0, 40].
        let t1 = trapezoid_oracle(f, 40.0, 400_000);
        let t2 = trapezoid_oracle(f, 40.0, 800_000);
        let oracle = (4.0 * t2 - t1) / 3.0;
        assert!((oracle - 0.596_347_362).abs() < 1e-9);
        let r = integrate_semi_infinite(f, 1e-12).unwrap();
        assert!((r.value - oracle).abs() < 1e-8);
        assert!(r.abs_error >= (r.value - 0.596_347_362_323_194_1).abs());
    }

    #[test]
    fn sharp_feature_near_origin() {
        // ∫ e^{-x}(1 - e^{-b/x}) dx = 1 - 2√b K₁(2√b) for tiny b
        let b: f64 = 1e-9;
        let r = integrate_semi_infinite_with(
            |x| (-x).exp() * -(-b / x).exp_m1(),
            &QuadOptions {
                abs_tol: 1e-22,
                rel_tol: 1e-10,
                max_evals: 200_000,
            },
        )
        .unwrap();
        let exact = crate::special_math::xk1_complement(2.0 * b.sqrt()).unwrap();
        assert!(
            (r.value - exact).abs() / exact < 1e-8,
            "{} vs {}",
            r.value,
            exact
        );
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let err = integrate_semi_infinite_with(
            |x| (x * 50.0).sin().abs() * (-x / 10.0).exp(),
            &QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 0.0,
                max_evals: 100,
            },
        )
        .unwrap_err();
        match err {
            Error::Convergence {
                estimate,
                evaluations,
                ..
            } => {
                assert!(estimate.is_finite());
                assert!(evaluations <= 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        assert!(integrate_semi_infinite(|x| (-x).exp(), 0.0).is_err());
    }
}
