//! Marginal posterior of one coefficient under a Laplace prior.
//!
//! Observation `x ~ N(theta, 1/n)` and prior density proportional to
//! `exp(-gamma |theta|)` give the posterior density
//!
//! ```text
//! pi(theta | x) = exp(-(n/2)(theta - x)^2 - gamma |theta|) / Z(x).
//! ```
//!
//! On each half-line the exponent is a quadratic. Completing the square on
//! `theta >= 0` with `m+ = x - gamma/n` and on `theta < 0` with
//! `m- = x + gamma/n` gives
//!
//! ```text
//! Z(x) = sqrt(pi/(2n)) e^{gamma^2/(2n)} [ e^{-gamma x} erfc(z-) + e^{gamma x} erfc(z+) ],
//! z-+ = -+ sqrt(n/2) x + gamma / sqrt(2n),
//! ```
//!
//! which is the closed form with `t0 = gamma x`. Since
//! `z-+^2 = n x^2/2 -+ gamma x + gamma^2/(2n)`, substituting
//! `erfc(z) = e^{-z^2} erfcx(z)` cancels both exponential prefactors:
//!
//! ```text
//! Z(x) = sqrt(pi/(2n)) e^{-n x^2/2} [ erfcx(z-) + erfcx(z+) ].
//! ```
//!
//! The literal form overflows once `gamma^2/(2n) > 709`. The scaled form
//! cannot overflow, but `erfcx` of a very negative argument can. Each
//! branch mass is therefore evaluated in log space. When its `z` is
//! positive the scaled form is used, and otherwise the erfc form is used.
//! In both cases the logarithm is finite.
//!
//! The posterior is the mixture, with weights `w+` and `w-`, of
//! `N(m+, 1/n)` restricted to `[0, inf)` and `N(m-, 1/n)` restricted to
//! `(-inf, 0]`. The negative branch is handled as the reflection
//! `theta = -Y` with `Y ~ N(-m-, 1/n)` restricted to `[0, inf)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::specfun::{
    ln_erfc_unchecked, ln_erfcx_unchecked, ln_norm_sf, log_sum_exp_unchecked, LN_2, LN_SQRT_2PI, SQRT_2,
};
use crate::truncnorm::PositiveTruncNormal;

/// Laplace prior scale `gamma_l = l^{1/2 + beta/d}`.
pub fn prior_gamma(l: usize, beta: f64, d: u32) -> f64 {
    (l as f64).powf(0.5 + beta / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorScale {
    pub beta: f64,
    pub d: u32,
    pub l: usize,
    pub gamma: f64,
}

impl PriorScale {
    pub fn new(beta: f64, d: u32, l: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) || d == 0 || l == 0 {
            return Err(Error::Invalid(format!(
                "prior scale needs beta > 0, d >= 1, l >= 1 (got {beta}, {d}, {l})"
            )));
        }
        Ok(Self { beta, d, l, gamma: prior_gamma(l, beta, d) })
    }
}

/// Explicit two-branch form of a [`MarginalPosterior`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureDecomposition {
    pub w_plus: f64,
    pub w_minus: f64,
    /// Location of the untruncated positive-branch normal, `x - gamma/n`.
    pub m_plus: f64,
    /// Location of the untruncated negative-branch normal, `x + gamma/n`.
    pub m_minus: f64,
    pub sd: f64,
    pub log_z: f64,
}

impl MixtureDecomposition {
    /// Normalized log-density assembled from the two truncated normals.
    pub fn log_density(&self, theta: f64) -> f64 {
        // a: standardized truncation point of the branch
        let (w, m, a) = if theta >= 0.0 {
            (self.w_plus, self.m_plus, -self.m_plus / self.sd)
        } else {
            (self.w_minus, self.m_minus, self.m_minus / self.sd)
        };
        // -t^2/2 - ln sf(a), t = (theta - m)/sd. For a > 0 both terms are
        // of order a^2; their difference is formed directly.
        let core = if a > 0.0 {
            -0.5 * theta * (theta - 2.0 * m) / (self.sd * self.sd) - (ln_erfcx_unchecked(a / SQRT_2) - LN_2)
        } else {
            let t = (theta - m) / self.sd;
            -0.5 * t * t - ln_norm_sf(a)
        };
        w.ln() + core - LN_SQRT_2PI - self.sd.ln()
    }
}

/// `pi(theta | x)` proportional to `exp(-(n/2)(theta - x)^2 - gamma |theta|)`.
#[derive(Debug, Clone, Copy)]
pub struct MarginalPosterior {
    n: f64,
    gamma: f64,
    x: f64,
    pos: PositiveTruncNormal,
    neg: PositiveTruncNormal,
    ln_w_plus: f64,
    ln_w_minus: f64,
    log_z: f64,
}

/// ln of the mass of `exp(-(n/2)(theta - xs)^2 - gamma theta)` on `theta >= 0`.
fn ln_branch_mass(n: f64, gamma: f64, xs: f64) -> f64 {
    let z = (gamma / n - xs) * (0.5 * n).sqrt();
    let half_ln = 0.5 * (std::f64::consts::PI / (2.0 * n)).ln();
    if z > 0.0 {
        -0.5 * n * xs * xs + half_ln + ln_erfcx_unchecked(z)
    } else {
        -xs * gamma + gamma * gamma / (2.0 * n) + half_ln + ln_erfc_unchecked(z)
    }
}

impl MarginalPosterior {
    pub fn new(n: u64, gamma: f64, x: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("sample size n must be >= 1".into()));
        }
        Self::with_precision(n as f64, gamma, x)
    }

    /// Same as [`MarginalPosterior::new`] with a real-valued precision `n`.
    pub fn with_precision(n: f64, gamma: f64, x: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Invalid(format!("precision n={n} must be positive")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Invalid(format!("prior scale gamma={gamma} must be positive")));
        }
        if !x.is_finite() {
            return Err(Error::Invalid(format!("observation x={x} must be finite")));
        }
        let sd = n.sqrt().recip();
        let ln_mp = ln_branch_mass(n, gamma, x);
        let ln_mm = ln_branch_mass(n, gamma, -x);
        let log_z = log_sum_exp_unchecked(ln_mp, ln_mm);
        // 1/(1 + e^t) in log form, computed per branch so neither weight
        // is obtained by subtraction from one
        let ln_w = |own: f64, other: f64| {
            let t = other - own;
            if t > 0.0 {
                -t - (-t).exp().ln_1p()
            } else {
                -t.exp().ln_1p()
            }
        };
        Ok(Self {
            n,
            gamma,
            x,
            pos: PositiveTruncNormal::new(x - gamma / n, sd),
            neg: PositiveTruncNormal::new(-x - gamma / n, sd),
            ln_w_plus: ln_w(ln_mp, ln_mm),
            ln_w_minus: ln_w(ln_mm, ln_mp),
            log_z,
        })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// ln of `Z(x) = int exp(-(n/2)(theta - x)^2 - gamma |theta|) dtheta`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_z
    }

    pub fn mixture(&self) -> MixtureDecomposition {
        MixtureDecomposition {
            w_plus: self.ln_w_plus.exp(),
            w_minus: self.ln_w_minus.exp(),
            m_plus: self.x - self.gamma / self.n,
            m_minus: self.x + self.gamma / self.n,
            sd: self.pos.sigma,
            log_z: self.log_z,
        }
    }

    pub fn ln_w_plus(&self) -> f64 {
        self.ln_w_plus
    }

    pub fn ln_w_minus(&self) -> f64 {
        self.ln_w_minus
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        let r = theta - self.x;
        -0.5 * self.n * r * r - self.gamma * theta.abs() - self.log_z
    }

    /// (w+, mean+, var+, w-, mean-, var-) with branch means taken on the
    /// reflected half-line, i.e. both means are nonnegative.
    fn branch_moments(&self) -> (f64, f64, f64, f64, f64, f64) {
        let (mp, vp) = self.pos.mean_var();
        let (my, vy) = self.neg.mean_var();
        (self.ln_w_plus.exp(), mp, vp, self.ln_w_minus.exp(), my, vy)
    }

    pub fn mean(&self) -> f64 {
        let (wp, mp, _, wm, my, _) = self.branch_moments();
        wp * mp - wm * my
    }

    pub fn variance(&self) -> f64 {
        let (wp, mp, vp, wm, my, vy) = self.branch_moments();
        // law of total variance; the between-branch term has no cancellation
        let gap = mp + my;
        wp * vp + wm * vy + wp * wm * gap * gap
    }

    /// `E (theta - c)^2` under the posterior.
    pub fn second_moment_about(&self, c: f64) -> f64 {
        let (wp, mp, vp, wm, my, vy) = self.branch_moments();
        let dp = mp - c;
        let dm = -my - c;
        wp * (vp + dp * dp) + wm * (vy + dm * dm)
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        if theta < 0.0 {
            (self.ln_w_minus + self.neg.ln_sf(-theta)).exp()
        } else {
            -(self.ln_w_plus + self.pos.ln_sf(theta)).exp_m1()
        }
    }

    /// `P(Theta > theta)`, accurate in the right tail.
    pub fn sf(&self, theta: f64) -> f64 {
        if theta < 0.0 {
            -(self.ln_w_minus + self.neg.ln_sf(-theta)).exp_m1()
        } else {
            (self.ln_w_plus + self.pos.ln_sf(theta)).exp()
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(self.quantile_split(u, 1.0 - u))
    }

    /// Quantile at level `lower`, given also `upper = 1 - lower` so that
    /// right-tail levels keep their relative precision.
    pub fn quantile_split(&self, lower: f64, upper: f64) -> f64 {
        let ln_lower = lower.ln();
        if ln_lower <= self.ln_w_minus {
            -self.neg.quantile_ln_sf(ln_lower - self.ln_w_minus)
        } else {
            self.pos.quantile_ln_sf(upper.ln() - self.ln_w_plus)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.ln_w_plus.exp() {
            self.pos.sample(rng)
        } else {
            -self.neg.sample(rng)
        }
    }

    /// Posterior mode: soft thresholding of x at gamma/n.
    pub fn map_estimate(&self) -> f64 {
        let t = self.gamma / self.n;
        self.x.signum() * (self.x.abs() - t).max(0.0)
    }
}
