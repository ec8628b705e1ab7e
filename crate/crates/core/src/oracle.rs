//! Brute-force reference values for the closed-form posterior.
//!
//! Integrates the raw unnormalized density `exp(-(n/2)(t - x)^2 - g|t|)`
//! with adaptive tanh-sinh quadrature. Nothing here reuses the erfc/erfcx
//! machinery; only `exp` and elementary arithmetic are involved.

use quadrature::double_exponential;

/// Integration window ends where the log-density has dropped this far
/// below its maximum.
const LOG_DROP: f64 = 80.0;
const REL_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMoments {
    pub log_z: f64,
    pub mean: f64,
    pub variance: f64,
    /// `E (theta - c)^2` for the requested `c`.
    pub second_moment: f64,
    pub mass_negative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub n: f64,
    pub gamma: f64,
    pub x: f64,
}

pub const STRESS_N: [f64; 4] = [1.0, 10.0, 1e3, 1e6];
pub const STRESS_GAMMA: [f64; 4] = [0.01, 1.0, 1e3, 1e6];
pub const STRESS_X_POINTS: usize = 32;

/// n x gamma x 32 observations evenly spaced in `[-50/sqrt(n), 50/sqrt(n)]`:
/// 512 cells covering Gaussian-dominated, balanced and prior-dominated
/// coefficients.
pub fn stress_grid() -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(STRESS_N.len() * STRESS_GAMMA.len() * STRESS_X_POINTS);
    for &n in &STRESS_N {
        for &gamma in &STRESS_GAMMA {
            let r = 50.0 / n.sqrt();
            for i in 0..STRESS_X_POINTS {
                let x = -r + 2.0 * r * i as f64 / (STRESS_X_POINTS - 1) as f64;
                cells.push(GridCell { n, gamma, x });
            }
        }
    }
    cells
}

fn adaptive<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, depth: u32) -> f64 {
    let out = double_exponential::integrate(f, a, b, 0.0);
    if out.error_estimate <= REL_TOL * out.integral.abs() || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, depth + 1) + adaptive(f, mid, b, depth + 1)
}

fn integrate_pieces<F: Fn(f64) -> f64 + Copy>(f: F, cuts: &[f64]) -> f64 {
    cuts.windows(2).map(|w| adaptive(f, w[0], w[1], 0)).sum()
}

struct Window {
    n: f64,
    gamma: f64,
    x: f64,
    h_max: f64,
    mode: f64,
    /// Sorted cut points: window ends, the mode, and 0 when inside.
    cuts: Vec<f64>,
}

impl Window {
    fn new(n: f64, gamma: f64, x: f64) -> Self {
        let mode = if x > gamma / n {
            x - gamma / n
        } else if x < -gamma / n {
            x + gamma / n
        } else {
            0.0
        };
        let h = |t: f64| -0.5 * n * (t - x) * (t - x) - gamma * t.abs();
        let h_max = h(mode);
        let reach = |dir: f64| {
            let mut s = 1.0 / (n.sqrt() + gamma);
            while h(mode + dir * s) - h_max > -LOG_DROP {
                s *= 2.0;
            }
            mode + dir * s
        };
        let (lo, hi) = (reach(-1.0), reach(1.0));
        let mut cuts = vec![lo, mode, hi];
        if lo < 0.0 && hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Self { n, gamma, x, h_max, mode, cuts }
    }

    /// `exp(h(t) - h_max)`.
    fn g(&self) -> impl Fn(f64) -> f64 + Copy {
        let (n, gamma, x, h_max) = (self.n, self.gamma, self.x, self.h_max);
        move |t: f64| (-0.5 * n * (t - x) * (t - x) - gamma * t.abs() - h_max).exp()
    }

    /// Cut points restricted to `(-inf, upper]`.
    fn cuts_below(&self, upper: f64) -> Vec<f64> {
        let mut c: Vec<f64> = self.cuts.iter().copied().filter(|&t| t < upper).collect();
        if c.is_empty() {
            return c;
        }
        c.push(upper.min(self.cuts[self.cuts.len() - 1]));
        c
    }
}

/// Quadrature of the posterior with `n`, prior scale `gamma`, observation
/// `x`. `c` is the centre for the reported second moment.
pub fn posterior_by_quadrature(n: f64, gamma: f64, x: f64, c: f64) -> OracleMoments {
    let w = Window::new(n, gamma, x);
    let g = w.g();
    let i0 = integrate_pieces(g, &w.cuts);
    let shift = w.mode;
    let mean = shift + integrate_pieces(move |t| (t - shift) * g(t), &w.cuts) / i0;
    let variance = integrate_pieces(move |t| (t - mean) * (t - mean) * g(t), &w.cuts) / i0;
    let second_moment = integrate_pieces(move |t| (t - c) * (t - c) * g(t), &w.cuts) / i0;
    let mass_negative = integrate_pieces(g, &w.cuts_below(0.0)) / i0;
    OracleMoments { log_z: w.h_max + i0.ln(), mean, variance, second_moment, mass_negative }
}

/// Posterior CDF at `theta` by quadrature.
pub fn cdf_by_quadrature(n: f64, gamma: f64, x: f64, theta: f64) -> f64 {
    let w = Window::new(n, gamma, x);
    let g = w.g();
    let i0 = integrate_pieces(g, &w.cuts);
    (integrate_pieces(g, &w.cuts_below(theta)) / i0).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_limit() {
        let m = posterior_by_quadrature(4.0, 1e-14, 0.3, 0.3);
        assert!((m.log_z - (2.0 * std::f64::consts::PI / 4.0).sqrt().ln()).abs() < 1e-12);
        assert!((m.mean - 0.3).abs() < 1e-12);
        assert!((m.variance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn laplace_limit() {
        // n -> 0 leaves the Laplace prior: Z = 2/g, variance 2/g^2
        let m = posterior_by_quadrature(1e-12, 2.0, 0.0, 0.0);
        assert!((m.log_z - 1f64.ln()).abs() < 1e-9);
        assert!((m.variance - 0.5).abs() < 1e-9);
        assert!((m.mass_negative - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_shape() {
        let g = stress_grid();
        assert_eq!(g.len(), 512);
        assert!(g.iter().any(|c| c.x == 50.0 && c.n == 1.0));
    }
}
