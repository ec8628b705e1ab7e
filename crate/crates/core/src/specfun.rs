//! Special functions needed by the closed-form posterior normalizer.
//!
//! `erfc` and `erfcx` follow W. J. Cody's rational Chebyshev approximations
//! (CALERF), with an asymptotic series for `erfcx` beyond `z = 30`. Everything
//! downstream works in log space, so `ln_erfc` and `ln_erfcx` are the
//! workhorses; the checked public entry points reject non-finite input.

#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

use crate::error::{Error, Result};

pub const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;
pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const LN_2: f64 = std::f64::consts::LN_2;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_78;

const THRESHOLD: f64 = 0.46875;
const ERFC_UNDERFLOW: f64 = 26.543;
const ASYMPTOTIC_START: f64 = 30.0;

const A: [f64; 5] = [
    3.1611237438705656,
    113.864154151050156,
    377.485237685302021,
    3209.37758913846947,
    0.185777706184603153,
];
const B: [f64; 4] = [
    23.6012909523441209,
    244.024637934444173,
    1282.61652607737228,
    2844.23683343917062,
];
const C: [f64; 9] = [
    0.564188496988670089,
    8.88314979438837594,
    66.1191906371416295,
    298.635138197400131,
    881.95222124176909,
    1712.04761263407058,
    2051.07837782607147,
    1230.33935479799725,
    2.15311535474403846e-8,
];
const D: [f64; 8] = [
    15.7449261107098347,
    117.693950891312499,
    537.181101862009858,
    1621.38957456669019,
    3290.79923573345963,
    4362.61909014324716,
    3439.36767414372164,
    1230.33935480374942,
];
const P: [f64; 6] = [
    0.305326634961232344,
    0.360344899949804439,
    0.125781726111229246,
    0.0160837851487422766,
    6.58749161529837803e-4,
    0.0163153871373020978,
];
const Q: [f64; 5] = [
    2.56852019228982242,
    1.87295284992346047,
    0.527905102951428412,
    0.0605183413124413191,
    0.00233520497626869185,
];

#[inline]
fn erf_small(z2: f64) -> f64 {
    // erf(y) / y for |y| <= 0.46875, in terms of y^2
    ((((A[4] * z2 + A[0]) * z2 + A[1]) * z2 + A[2]) * z2 + A[3])
        / ((((z2 + B[0]) * z2 + B[1]) * z2 + B[2]) * z2 + B[3])
}

#[inline]
fn erfcx_mid(y: f64) -> f64 {
    let mut num = C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + C[i]) * y;
        den = (den + D[i]) * y;
    }
    (num + C[7]) / (den + D[7])
}

#[inline]
fn erfcx_large(y: f64) -> f64 {
    let z = 1.0 / (y * y);
    let mut num = P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + P[i]) * z;
        den = (den + Q[i]) * z;
    }
    let r = z * (num + P[4]) / (den + Q[4]);
    (FRAC_1_SQRT_PI - r) / y
}

#[inline]
fn erfcx_asymptotic(y: f64) -> f64 {
    // 1/(y sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2y^2)^k
    let h = 0.5 / (y * y);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=8 {
        term *= -((2 * k - 1) as f64) * h;
        sum += term;
    }
    sum * FRAC_1_SQRT_PI / y
}

/// exp(-y^2) split so the rounding error of y^2 does not get amplified.
#[inline]
fn exp_neg_sq(y: f64) -> f64 {
    let ys = (y * 16.0).trunc() / 16.0;
    (-ys * ys).exp() * (-(y - ys) * (y + ys)).exp()
}

#[inline]
fn exp_pos_sq(y: f64) -> f64 {
    let ys = (y * 16.0).trunc() / 16.0;
    (ys * ys).exp() * ((y - ys) * (y + ys)).exp()
}

/// erfcx for y >= 0.
#[inline]
fn erfcx_nonneg(y: f64) -> f64 {
    if y <= THRESHOLD {
        let z2 = y * y;
        z2.exp() * (1.0 - y * erf_small(z2))
    } else if y <= 4.0 {
        erfcx_mid(y)
    } else if y <= ASYMPTOTIC_START {
        erfcx_large(y)
    } else {
        erfcx_asymptotic(y)
    }
}

/// erfc for y >= 0.
#[inline]
fn erfc_nonneg(y: f64) -> f64 {
    if y <= THRESHOLD {
        1.0 - y * erf_small(y * y)
    } else if y >= ERFC_UNDERFLOW {
        0.0
    } else {
        let scaled = if y <= 4.0 { erfcx_mid(y) } else { erfcx_large(y) };
        scaled * exp_neg_sq(y)
    }
}

pub(crate) fn erfc_unchecked(z: f64) -> f64 {
    if z >= 0.0 {
        erfc_nonneg(z)
    } else {
        2.0 - erfc_nonneg(-z)
    }
}

pub(crate) fn erfcx_unchecked(z: f64) -> f64 {
    if z >= 0.0 {
        erfcx_nonneg(z)
    } else if z < -26.6287357137514 {
        f64::INFINITY
    } else {
        2.0 * exp_pos_sq(z) - erfcx_nonneg(-z)
    }
}

/// ln erfc(z), finite for every finite z.
pub(crate) fn ln_erfc_unchecked(z: f64) -> f64 {
    if z > 0.0 {
        erfcx_nonneg(z).ln() - z * z
    } else {
        // erfc(z) = 2 - erfc(|z|) lies in [1, 2]
        LN_2 + (-0.5 * erfc_nonneg(-z)).ln_1p()
    }
}

/// ln erfcx(z), finite for every finite z.
pub(crate) fn ln_erfcx_unchecked(z: f64) -> f64 {
    if z >= 0.0 {
        erfcx_nonneg(z).ln()
    } else {
        z * z + ln_erfc_unchecked(z)
    }
}

fn check(z: f64, name: &'static str) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!("{name}: argument must be finite, got {z}")))
    }
}

/// Complementary error function, `(2/sqrt(pi)) * int_z^inf exp(-s^2) ds`.
pub fn erfc(z: f64) -> Result<f64> {
    check(z, "erfc").map(erfc_unchecked)
}

/// Scaled complementary error function `exp(z^2) * erfc(z)`.
///
/// Does not overflow for any positive argument; for large `z` it behaves like
/// `1 / (z sqrt(pi))`. Below roughly `-26.6` the true value exceeds the f64
/// range and `+inf` is returned; use [`ln_erfcx`] there.
pub fn erfcx(z: f64) -> Result<f64> {
    check(z, "erfcx").map(erfcx_unchecked)
}

pub fn ln_erfc(z: f64) -> Result<f64> {
    check(z, "ln_erfc").map(ln_erfc_unchecked)
}

pub fn ln_erfcx(z: f64) -> Result<f64> {
    check(z, "ln_erfcx").map(ln_erfcx_unchecked)
}

/// `ln(exp(a) + exp(b))` without overflow. `-inf` is the absorbing element.
pub fn log_sum_exp(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a == f64::INFINITY || b == f64::INFINITY {
        return Err(Error::Domain(format!(
            "log_sum_exp: arguments must be finite or -inf, got ({a}, {b})"
        )));
    }
    Ok(log_sum_exp_unchecked(a, b))
}

#[inline]
pub(crate) fn log_sum_exp_unchecked(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// ln of the standard normal upper tail, ln P(Z > t).
#[inline]
pub(crate) fn ln_norm_sf(t: f64) -> f64 {
    ln_erfc_unchecked(t / SQRT_2) - LN_2
}

/// Standard normal upper tail P(Z > t).
#[inline]
pub(crate) fn norm_sf(t: f64) -> f64 {
    0.5 * erfc_unchecked(t / SQRT_2)
}

/// Hazard `phi(t) / P(Z > t)`, stable for all t.
#[inline]
pub(crate) fn norm_hazard(t: f64) -> f64 {
    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_355_88;
    SQRT_2_OVER_PI / erfcx_unchecked(t / SQRT_2)
}

/// Standard normal quantile (Wichura's AS 241, followed by one Newton
/// correction against `erfc`).
pub(crate) fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    let x = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
            + 67265.770927008700853)
            * r
            + 45921.953931549871457)
            * r
            + 13731.693765509461125)
            * r
            + 1971.5909503065514427)
            * r
            + 133.14166789178437745)
            * r
            + 3.387132872796366608)
            / (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                + 39307.89580009271061)
                * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0)
    } else {
        let tail = if q < 0.0 { p } else { 1.0 - p };
        let mut r = (-tail.ln()).sqrt();
        let v = if r <= 5.0 {
            r -= 1.6;
            (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                + 0.24178072517745061177)
                * r
                + 1.27045825245236838258)
                * r
                + 3.64784832476320460504)
                * r
                + 5.7694972214606914055)
                * r
                + 4.6303378461565452959)
                * r
                + 1.42343711074968357734)
                / (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966)
                    * r
                    + 0.14810397642748007459)
                    * r
                    + 0.68976733498510000455)
                    * r
                    + 1.6763848301838038494)
                    * r
                    + 2.05319162663775882187)
                    * r
                    + 1.0)
        } else {
            r -= 5.0;
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                + 0.0012426609473880784386)
                * r
                + 0.026532189526576123093)
                * r
                + 0.29656057182850489123)
                * r
                + 1.7848265399172913358)
                * r
                + 5.4637849111641143699)
                * r
                + 6.6579046435011037772)
                / (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5)
                    * r
                    + 7.868691311456132591e-4)
                    * r
                    + 0.0148753612908506148525)
                    * r
                    + 0.13692988092273580531)
                    * r
                    + 0.59983220655588793769)
                    * r
                    + 1.0)
        };
        if q < 0.0 {
            -v
        } else {
            v
        }
    };
    // one Newton step on the side with the smaller tail
    if x < 0.0 {
        let cdf = norm_sf(-x);
        let pdf = (-0.5 * x * x - LN_SQRT_2PI).exp();
        if pdf > 0.0 {
            return x - (cdf - p) / pdf;
        }
    } else {
        let sf = norm_sf(x);
        let pdf = (-0.5 * x * x - LN_SQRT_2PI).exp();
        if pdf > 0.0 {
            return x + (sf - (1.0 - p)) / pdf;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on exp(-s^2) over [z, z + 12], a quadrature oracle
    /// independent of the rational approximations.
    fn erfc_by_quadrature(z: f64) -> f64 {
        let n = 200_000;
        let b = z + 12.0;
        let h = (b - z) / n as f64;
        let f = |s: f64| (-s * s).exp();
        // compensated accumulation keeps the oracle itself at ~1e-16
        let (mut acc, mut comp) = (f(z) + f(b), 0.0);
        for i in 1..n {
            let s = z + i as f64 * h;
            let term = if i % 2 == 1 { 4.0 * f(s) } else { 2.0 * f(s) } - comp;
            let next = acc + term;
            comp = (next - acc) - term;
            acc = next;
        }
        acc * h / 3.0 * 2.0 * FRAC_1_SQRT_PI
    }

    #[test]
    fn erfc_at_zero_is_one() {
        assert_eq!(erfc(0.0).unwrap(), 1.0);
    }

    #[test]
    fn erfc_reflection() {
        let z = 0.7;
        assert!((erfc(-z).unwrap() - (2.0 - erfc(z).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn erfc_at_one_matches_quadrature() {
        let oracle = erfc_by_quadrature(1.0);
        assert!((oracle - 0.157_299_207_050_285_13).abs() < 1e-14);
        assert!((erfc(1.0).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn erfc_matches_quadrature_on_grid() {
        for i in 0..=24 {
            let z = -6.0 + 0.5 * i as f64;
            let oracle = erfc_by_quadrature(z);
            let got = erfc(z).unwrap();
            assert!((got - oracle).abs() <= 1e-14, "z={z}: {got} vs {oracle}");
        }
    }

    #[test]
    fn erfc_monotone_on_dense_grid() {
        let mut prev = f64::INFINITY;
        for i in 0..=12_000 {
            let z = -6.0 + 1e-3 * i as f64;
            let v = erfc(z).unwrap();
            assert!(v <= prev, "not monotone at {z}");
            prev = v;
        }
    }

    #[test]
    fn non_finite_is_a_domain_error() {
        assert!(erfc(f64::NAN).is_err());
        assert!(erfcx(f64::INFINITY).is_err());
        assert!(log_sum_exp(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn erfcx_basic_values() {
        assert_eq!(erfcx(0.0).unwrap(), 1.0);
        let direct = 25f64.exp() * erfc(5.0).unwrap();
        assert!((erfcx(5.0).unwrap() / direct - 1.0).abs() < 1e-13);
    }

    #[test]
    fn erfcx_far_tail_matches_asymptotic_oracle() {
        // leading terms of the asymptotic expansion, summed independently
        let z: f64 = 1e6;
        let h = 1.0 / (2.0 * z * z);
        let oracle = (1.0 - h + 3.0 * h * h) / (z * std::f64::consts::PI.sqrt());
        assert!((erfcx(z).unwrap() / oracle - 1.0).abs() < 1e-10);
        assert!(erfcx(1e8).unwrap().is_finite());
        assert!(erfcx(1e300).unwrap() > 0.0);
    }

    #[test]
    fn erfcx_branch_seams_are_continuous() {
        for &z in &[THRESHOLD, 4.0, ASYMPTOTIC_START] {
            let lo = erfcx(z * (1.0 - 1e-15)).unwrap();
            let hi = erfcx(z * (1.0 + 1e-15)).unwrap();
            assert!((lo / hi - 1.0).abs() < 1e-13, "seam at {z}: {lo} {hi}");
        }
    }

    #[test]
    fn erfcx_strictly_decreasing_on_nonnegative_axis() {
        let mut prev = f64::INFINITY;
        let mut z = 0.0;
        while z < 200.0 {
            let v = erfcx(z).unwrap();
            assert!(v < prev, "not decreasing at {z}");
            prev = v;
            z += 0.01 + z * 0.01;
        }
    }

    #[test]
    fn ln_variants_agree_with_direct_forms() {
        for &z in &[-5.0, -1.0, -0.1, 0.0, 0.3, 2.0, 10.0] {
            let e = erfc(z).unwrap();
            assert!((ln_erfc(z).unwrap() - e.ln()).abs() < 1e-13);
            let ex = erfcx(z).unwrap();
            assert!((ln_erfcx(z).unwrap() - ex.ln()).abs() < 1e-12 * ex.ln().abs().max(1.0));
        }
        // deep negative: ln erfcx(z) ~ z^2 + ln 2
        let z = -100.0;
        assert!((ln_erfcx(z).unwrap() - (z * z + LN_2)).abs() < 1e-12);
        // deep positive ln erfc stays finite
        assert!(ln_erfc(1e4).unwrap().is_finite());
    }

    #[test]
    fn log_sum_exp_cases() {
        assert!((log_sum_exp(0.0, 0.0).unwrap() - LN_2).abs() < 1e-16);
        assert_eq!(log_sum_exp(f64::NEG_INFINITY, 3.5).unwrap(), 3.5);
        let want = 710.0 + (-10f64).exp().ln_1p();
        assert!((log_sum_exp(710.0, 700.0).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn norm_quantile_round_trip() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = norm_quantile(p);
            let back = 1.0 - norm_sf(x);
            assert!((back - p).abs() < 1e-15, "p={p}");
        }
        for &p in &[1e-300, 1e-100, 1e-20, 1e-8] {
            let x = norm_quantile(p);
            let back = norm_sf(-x);
            assert!((back / p - 1.0).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn hazard_matches_ratio() {
        for &t in &[-3.0, 0.0, 1.0, 5.0] {
            let pdf = (-0.5 * t * t - LN_SQRT_2PI).exp();
            let ratio = pdf / norm_sf(t);
            assert!((norm_hazard(t) / ratio - 1.0).abs() < 1e-13);
        }
        // far right tail: hazard ~ t
        assert!((norm_hazard(1e5) / 1e5 - 1.0).abs() < 1e-9);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reflection_sums_to_two(z in -30.0f64..30.0) {
                let s = erfc(z).unwrap() + erfc(-z).unwrap();
                prop_assert!((s - 2.0).abs() < 1e-13);
            }

            #[test]
            fn erfcx_consistent_with_erfc(z in -26.0f64..26.0) {
                let lhs = erfcx(z).unwrap() * (-z * z).exp();
                let rhs = erfc(z).unwrap();
                prop_assume!(rhs > 1e-300);
                prop_assert!((lhs / rhs - 1.0).abs() < 1e-12, "z={} {} {}", z, lhs, rhs);
            }
        }
    }
}
