//! 2-Wasserstein distances between univariate laws via the quantile
//! coupling, and their weighted aggregation over coordinates.
//!
//! `W2(a, b)^2 = int_0^1 (Qa(u) - Qb(u))^2 du`. The integral is taken in
//! normal scores, `u = Phi(t)`, on `|t| <= T` with `Phi(-T) = 1e-12`.
//! Log-concave quantile functions grow like `log(1/u)` at the ends of
//! (0, 1). In `t` they become smooth and at most polynomial, so
//! Gauss-Legendre panels converge quickly.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::posterior::MarginalPosterior;
use crate::specfun::{norm_quantile, norm_sf, LN_SQRT_2PI};
use crate::sum::pairwise_sum;

/// Quantile levels closer than this to 0 or 1 are not evaluated.
pub const CLIP: f64 = 1e-12;
pub const REL_TOL: f64 = 1e-8;
pub const MAX_DOUBLINGS: usize = 10;
const GL_DEGREE: usize = 16;

/// A monotone map `(0, 1) -> R`.
pub trait QuantileFn {
    /// Quantile at level `lower`, with `upper = 1 - lower` supplied
    /// separately so that levels near 1 keep their relative precision.
    fn quantile_split(&self, lower: f64, upper: f64) -> f64;

    fn quantile_at(&self, u: f64) -> f64 {
        self.quantile_split(u, 1.0 - u)
    }

    /// Levels `(u, 1 - u)` at which the quantile function is not smooth.
    fn kinks(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
}

impl QuantileFn for MarginalPosterior {
    fn quantile_split(&self, lower: f64, upper: f64) -> f64 {
        MarginalPosterior::quantile_split(self, lower, upper)
    }

    fn kinks(&self) -> Vec<(f64, f64)> {
        // the density is continuous but not differentiable at 0
        vec![(self.ln_w_minus().exp(), self.ln_w_plus().exp())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl QuantileFn for Gaussian {
    fn quantile_split(&self, lower: f64, upper: f64) -> f64 {
        let z = if lower <= upper { norm_quantile(lower) } else { -norm_quantile(upper) };
        self.mean + self.sd * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass(pub f64);

impl QuantileFn for PointMass {
    fn quantile_split(&self, _: f64, _: f64) -> f64 {
        self.0
    }
}

impl<T: QuantileFn + ?Sized> QuantileFn for &T {
    fn quantile_split(&self, lower: f64, upper: f64) -> f64 {
        (**self).quantile_split(lower, upper)
    }

    fn kinks(&self) -> Vec<(f64, f64)> {
        (**self).kinks()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W2Estimate {
    pub value: f64,
    /// Estimate of the clipped contribution from levels within `CLIP` of 0
    /// or 1, on the squared scale.
    pub tail_bound: f64,
    /// Panels per smooth piece at convergence.
    pub panels: usize,
}

fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(GL_DEGREE).unwrap()))
        .as_node_weight_pairs()
}

/// Normal score of a level given as `(u, 1 - u)`.
fn score(lower: f64, upper: f64) -> f64 {
    if lower <= upper {
        norm_quantile(lower)
    } else {
        -norm_quantile(upper)
    }
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t - LN_SQRT_2PI).exp()
}

struct Coupling<A, B> {
    a: A,
    b: B,
    /// Piece boundaries in normal scores, from `-T` to `T`.
    cuts: Vec<f64>,
}

impl<A: QuantileFn, B: QuantileFn> Coupling<A, B> {
    fn new(a: A, b: B) -> Self {
        let t_max = -norm_quantile(CLIP);
        let mut cuts = vec![-t_max, t_max];
        for (lo, up) in a.kinks().into_iter().chain(b.kinks()) {
            let t = score(lo, up);
            if t.abs() < t_max {
                cuts.push(t);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Self { a, b, cuts }
    }

    fn gap(&self, t: f64) -> f64 {
        let lower = norm_sf(-t);
        let upper = norm_sf(t);
        self.a.quantile_split(lower, upper) - self.b.quantile_split(lower, upper)
    }

    /// Composite rule with `panels` equal panels per piece.
    fn integrate(&self, panels: usize) -> f64 {
        let rule = gl_rule();
        let mut parts = Vec::with_capacity((self.cuts.len() - 1) * panels);
        for w in self.cuts.windows(2) {
            let h = (w[1] - w[0]) / panels as f64;
            for k in 0..panels {
                let lo = w[0] + k as f64 * h;
                let half = 0.5 * h;
                let mid = lo + half;
                let s: f64 = rule
                    .iter()
                    .map(|&(x, wt)| {
                        let t = mid + half * x;
                        let g = self.gap(t);
                        wt * g * g * std_normal_pdf(t)
                    })
                    .sum();
                parts.push(half * s);
            }
        }
        pairwise_sum(&parts)
    }

    /// Rounding floor for `W2`: quantile values carry relative error of a
    /// few ulps, so differences below `eps * max |Q|` are not resolved.
    fn noise_floor(&self) -> f64 {
        let t = self.cuts[self.cuts.len() - 1];
        let (lo, hi) = (norm_sf(t), norm_sf(-t));
        let scale = [
            self.a.quantile_split(lo, hi),
            self.a.quantile_split(hi, lo),
            self.b.quantile_split(lo, hi),
            self.b.quantile_split(hi, lo),
        ]
        .iter()
        .fold(0.0_f64, |m, q| m.max(q.abs()));
        64.0 * f64::EPSILON * scale
    }

    fn tail_bound(&self) -> f64 {
        let t = self.cuts[self.cuts.len() - 1];
        let lo = self.gap(-t);
        let hi = self.gap(t);
        // the gap grows at most polynomially in the score beyond +-T; a factor
        // 2 covers that growth over the clipped normal tail
        2.0 * CLIP * (lo * lo + hi * hi)
    }
}

/// `W2(a, b)` by quantile coupling with panel doubling until the relative
/// change falls below `REL_TOL`.
pub fn w2_univariate<A: QuantileFn, B: QuantileFn>(a: A, b: B) -> Result<W2Estimate> {
    w2_with_start(a, b, 1)
}

fn w2_with_start<A: QuantileFn, B: QuantileFn>(a: A, b: B, start: usize) -> Result<W2Estimate> {
    let c = Coupling::new(a, b);
    let mut panels = start;
    let floor = c.noise_floor();
    let mut prev = c.integrate(panels).sqrt();
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let cur = c.integrate(panels).sqrt();
        if (cur - prev).abs() <= REL_TOL * cur + floor {
            return Ok(W2Estimate { value: cur, tail_bound: c.tail_bound(), panels });
        }
        prev = cur;
    }
    Err(Error::NonConvergence { estimate: prev, doublings: MAX_DOUBLINGS })
}

/// `W2(p, delta_c) = sqrt(E_p (theta - c)^2)` in closed form.
pub fn w2_to_dirac(p: &MarginalPosterior, c: f64) -> f64 {
    p.second_moment_about(c).sqrt()
}

/// `sum_l weights_l * w2_l^2`.
pub fn product_w2_sq(weights: &[f64], per_coord_w2: &[f64]) -> Result<f64> {
    if weights.len() != per_coord_w2.len() {
        return Err(Error::LengthMismatch(weights.len(), per_coord_w2.len()));
    }
    let terms: Vec<f64> = weights.iter().zip(per_coord_w2).map(|(w, d)| w * d * d).collect();
    Ok(pairwise_sum(&terms))
}
