//! Normal distribution N(mu, sigma^2) restricted to the half-line [0, inf).
//!
//! Everything is parametrised by the standardized truncation point
//! `a = -mu / sigma`. For `a >= 0` the truncation sits in the right tail and
//! the distribution is handled in the offset `delta = (y / sigma)` from the
//! truncation point, using the Mills ratio so that nothing cancels when `a`
//! is huge (posterior branches with `gamma / n` far above the noise level).

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::specfun::{ln_erfcx_unchecked, ln_norm_sf, norm_hazard, norm_quantile, SQRT_2};

/// Above this standardized truncation point the moment formulas switch to
/// the continued fraction for the Mills ratio.
const CF_SWITCH: f64 = 10.0;
const CF_DEPTH: usize = 60;
/// Truncation points further than this into the tail use exponential
/// rejection instead of inverse-CDF sampling.
const REJECTION_SWITCH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveTruncNormal {
    pub mu: f64,
    pub sigma: f64,
}

/// Returns (K1, K2) of the tail continued fraction
/// `K_k = k / (a + K_{k+1})`, so that `hazard(a) = a + K1`.
fn mills_cf(a: f64) -> (f64, f64) {
    let mut k_next = 0.0;
    let mut k2 = 0.0;
    for k in (1..=CF_DEPTH).rev() {
        let kk = k as f64 / (a + k_next);
        if k == 2 {
            k2 = kk;
        }
        k_next = kk;
    }
    (k_next, k2)
}

impl PositiveTruncNormal {
    pub fn new(mu: f64, sigma: f64) -> Self {
        debug_assert!(sigma > 0.0 && mu.is_finite());
        Self { mu, sigma }
    }

    /// Standardized truncation point.
    #[inline]
    pub fn a(&self) -> f64 {
        -self.mu / self.sigma
    }

    /// ln P(N(mu, sigma^2) >= 0), the mass the truncation keeps.
    pub fn ln_kept_mass(&self) -> f64 {
        ln_norm_sf(self.a())
    }

    /// Mean and variance of the truncated law.
    pub fn mean_var(&self) -> (f64, f64) {
        let a = self.a();
        let s = self.sigma;
        if a > CF_SWITCH {
            let (k1, k2) = mills_cf(a);
            // mean = sigma (hazard - a), var = sigma^2 (1 - hazard (hazard - a))
            (s * k1, s * s * k1 * (k2 - k1))
        } else {
            let lam = norm_hazard(a);
            let mean = if a < 0.0 { self.mu + s * lam } else { s * (lam - a) };
            let var = 1.0 - lam * (lam - a);
            (mean, s * s * var.max(0.0))
        }
    }

    /// ln of the conditional survival P(Y > y | Y >= 0) for y >= 0.
    pub fn ln_sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let a = self.a();
        if a >= 0.0 {
            let delta = y / self.sigma;
            ln_tail_ratio(a, delta)
        } else {
            let t = (y - self.mu) / self.sigma;
            ln_norm_sf(t) - ln_norm_sf(a)
        }
    }

    /// Density of the truncated law at y >= 0.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return f64::NEG_INFINITY;
        }
        let t = (y - self.mu) / self.sigma;
        -0.5 * t * t - crate::specfun::LN_SQRT_2PI - self.sigma.ln() - self.ln_kept_mass()
    }

    /// The point y >= 0 whose conditional survival equals exp(ln_p).
    ///
    /// Newton on the (concave) log-survival, safeguarded by a bracket and
    /// bisection.
    pub fn quantile_ln_sf(&self, ln_p: f64) -> f64 {
        if ln_p >= 0.0 {
            return 0.0;
        }
        if ln_p == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        let a = self.a();
        if a >= 0.0 {
            let delta = solve_tail_offset(a, ln_p);
            self.sigma * delta
        } else {
            let target = ln_p + ln_norm_sf(a);
            let t = solve_ln_sf(a, target);
            (self.mu + self.sigma * t).max(0.0)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.a();
        if a > REJECTION_SWITCH {
            // Robert (1995) translated-exponential proposal with optimal rate
            let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
            loop {
                let e: f64 = Exp1.sample(rng);
                let z = a + e / alpha;
                let u: f64 = rng.random();
                if u <= (-0.5 * (z - alpha) * (z - alpha)).exp() {
                    return self.sigma * (z - a);
                }
            }
        } else if a < -8.0 {
            // truncation removes < 1e-15 of the mass; plain rejection
            loop {
                let z: f64 = StandardNormal.sample(rng);
                if z >= a {
                    return (self.mu + self.sigma * z).max(0.0);
                }
            }
        } else {
            // inverse CDF on the conditional survival; open interval (0, 1)
            let u: f64 = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            self.quantile_ln_sf(u.ln())
        }
    }
}

/// ln[ P(Z > a + delta) / P(Z > a) ] via the Mills ratio; exact, and
/// well-conditioned in delta for any a >= 0.
#[inline]
fn ln_tail_ratio(a: f64, delta: f64) -> f64 {
    -a * delta - 0.5 * delta * delta + ln_erfcx_unchecked((a + delta) / SQRT_2)
        - ln_erfcx_unchecked(a / SQRT_2)
}

fn solve_tail_offset(a: f64, ln_p: f64) -> f64 {
    // ln_tail_ratio(a, d) <= -a d - d^2/2, so both bounds bracket the root
    let q = -ln_p;
    let mut hi = (2.0 * q).sqrt();
    if a > 0.0 {
        hi = hi.min(q / a);
    }
    hi = hi * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let mut lo = 0.0;
    // root of -a d - d^2/2 = ln_p, ignoring the Mills ratio change
    let mut d = (2.0 * q / (a + (a * a + 2.0 * q).sqrt())).clamp(lo, hi);
    for _ in 0..200 {
        let g = ln_tail_ratio(a, d) - ln_p;
        if g == 0.0 {
            return d;
        }
        if g > 0.0 {
            lo = d;
        } else {
            hi = d;
        }
        let mut next = d + g / norm_hazard(a + d);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - d).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= f64::EPSILON * hi {
            return next;
        }
        d = next;
    }
    d
}

/// Solves ln P(Z > t) = target for t >= a (a < 0 branch).
fn solve_ln_sf(a: f64, target: f64) -> f64 {
    let mut lo = a;
    let mut hi = a.max((-2.0 * target).max(0.0).sqrt()) + 1.0;
    let guess = if target > -700.0 {
        -norm_quantile(target.exp())
    } else {
        let m = -2.0 * target;
        (m - (2.0 * std::f64::consts::PI * m).ln()).max(0.0).sqrt()
    };
    let mut t = if guess.is_finite() { guess.clamp(lo, hi) } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let g = ln_norm_sf(t) - target;
        if g == 0.0 {
            return t;
        }
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t + g / norm_hazard(t);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let scale = next.abs().max(1.0);
        if (next - t).abs() <= 4.0 * f64::EPSILON * scale || hi - lo <= 2.0 * f64::EPSILON * scale {
            return next;
        }
        t = next;
    }
    t
}
