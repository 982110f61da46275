//! Modified Bessel function of the second kind, order one.
//!
//! Below `x = 2` the ascending series is used. It is written in terms of
//! `t = x²/4` and evaluates `1 - x·K₁(x)` directly, which keeps full
//! relative precision in the complement as `x → 0`; outage probabilities of
//! the form `1 - e^{-Q}·2√R·K₁(2√R)` depend on exactly that quantity.
//! Above `x = 2` Temme's continued fraction (Steed's algorithm) is used.

use super::EULER_GAMMA;
use crate::error::{domain, Result};

const SERIES_CUTOFF: f64 = 2.0;
const MAX_TERMS: usize = 300;

/// `K₁(x)` for `x > 0`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return domain(format!("K1 requires x > 0, got {x}"));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < SERIES_CUTOFF {
        Ok((1.0 - complement_series(0.25 * x * x)) / x)
    } else {
        Ok(k1_continued_fraction(x))
    }
}

/// `1 - x·K₁(x)` for `x ≥ 0`, accurate in relative terms near zero.
///
/// `x·K₁(x)` decreases from 1 at the origin to 0 at infinity, so the result
/// lies in `[0, 1]`.
pub fn xk1_complement(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("1 - xK1(x) requires x >= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x < SERIES_CUTOFF {
        Ok(complement_series(0.25 * x * x))
    } else {
        Ok(1.0 - x * k1_continued_fraction(x))
    }
}

/// `1 - x·K₁(x)` as a function of `t = x²/4`:
///
/// `t · Σ_k [ψ(k+1) + ψ(k+2) − ln t] · t^k / (k!(k+1)!)`
pub(crate) fn complement_series(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let ln_t = t.ln();
    // psi(1) = -gamma, psi(2) = 1 - gamma
    let mut psi_k1 = -EULER_GAMMA;
    let mut psi_k2 = 1.0 - EULER_GAMMA;
    let mut coeff = 1.0; // t^k / (k! (k+1)!)
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        let term = (psi_k1 + psi_k2 - ln_t) * coeff;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > 0 {
            break;
        }
        let kf = k as f64;
        psi_k1 += 1.0 / (kf + 1.0);
        psi_k2 += 1.0 / (kf + 2.0);
        coeff *= t / ((kf + 1.0) * (kf + 2.0));
    }
    t * sum
}

/// Temme's CF2 for `K₀`, `K₁` at order zero, valid for `x ≥ 2`.
fn k1_continued_fraction(x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    k0 * (x + 0.5 - h) / x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// K₁(x) = ∫₀^∞ e^{−x cosh u} cosh u du, trapezoid rule. The integrand is
    /// analytic and doubly-exponentially decaying, so the trapezoid sum
    /// converges geometrically in the step size.
    fn k1_oracle(x: f64) -> f64 {
        let h: f64 = 0.01;
        let mut sum = 0.5 * (-x).exp();
        let mut u = h;
        loop {
            let term = (-x * u.cosh()).exp() * u.cosh();
            sum += term;
            if term < 1e-30 * sum {
                break;
            }
            u += h;
        }
        sum * h
    }

    #[test]
    fn oracle_reproduces_tabulated_values() {
        // frozen from the trapezoid oracle
        assert!((k1_oracle(1.0) - 0.601_907_230_197_234_6).abs() < 1e-14);
        assert!((k1_oracle(2.0) - 0.139_865_881_816_522_4).abs() < 1e-14);
    }

    #[test]
    fn k1_at_one_and_two() {
        let k1 = bessel_k1(1.0).unwrap();
        assert!((k1 - 0.601_907_230_2).abs() < 1e-10);
        assert!((k1 - 0.601_907_230_197_234_6).abs() < 1e-15);
        let k2 = bessel_k1(2.0).unwrap();
        assert!((k2 - 0.139_865_881_8).abs() < 1e-10);
        assert!((k2 - 0.139_865_881_816_522_4).abs() / k2 < 1e-13);
    }

    #[test]
    fn small_argument_limit() {
        let x = 1e-8;
        assert!((x * bessel_k1(x).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn matches_oracle_across_range() {
        let mut x = 1e-3;
        while x <= 700.0 {
            let (v, o) = (bessel_k1(x).unwrap(), k1_oracle(x));
            assert!((v - o).abs() <= 1e-10 * o, "x = {x}: {v:e} vs {o:e}");
            x *= 1.07;
        }
        // either side of the switchover
        for x in [1.999_999, 2.0, 2.000_001] {
            let (v, o) = (bessel_k1(x).unwrap(), k1_oracle(x));
            assert!((v - o).abs() <= 1e-12 * o);
        }
    }

    #[test]
    fn complement_is_accurate_near_zero() {
        // 1 - xK1(x) ≈ t(1 - 2γ - ln t) with t = x²/4 at leading order
        let x: f64 = 2e-6;
        let t = 0.25 * x * x;
        let lead = t * (1.0 - 2.0 * EULER_GAMMA - t.ln());
        let c = xk1_complement(x).unwrap();
        assert!((c - lead).abs() / lead < 1e-9);
        assert!(c > 0.0);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(bessel_k1(0.0).is_err());
        assert!(bessel_k1(-1.0).is_err());
        assert!(bessel_k1(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn xk1_bounded_and_decreasing(x in 1e-8f64..50.0, dx in 1e-6f64..1.0) {
            let a = x * bessel_k1(x).unwrap();
            let b = (x + dx) * bessel_k1(x + dx).unwrap();
            prop_assert!(a <= 1.0);
            prop_assert!(b < a);
        }
    }
}
