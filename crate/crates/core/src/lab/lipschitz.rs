//! Measured Lipschitz ratios of `x -> pi(. | x)` in W2.

use serde::{Deserialize, Serialize};

use super::thresholds::{default_m_n, thresholds};
use crate::error::{Error, Result};
use crate::posterior::{prior_gamma, MarginalPosterior};
use crate::wasserstein::w2_univariate;

/// `4 e^{16 sqrt(2/pi)}`, the bound for `l <= L_n`.
pub const LOW_FREQUENCY_BOUND: f64 = 1_400_650.506_213_527_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `l <= L_n`
    Low,
    /// `l > L_n`, bound `8 n / gamma_l^2`
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipCell {
    pub n: u64,
    pub l: usize,
    pub regime: Regime,
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn lipschitz_bound(n: u64, l: usize, beta: f64, d: u32) -> (Regime, f64) {
    let (_, l_n) = thresholds(n, beta, d, default_m_n(n));
    if l <= l_n {
        (Regime::Low, LOW_FREQUENCY_BOUND)
    } else {
        let g = prior_gamma(l, beta, d);
        (Regime::High, 8.0 * n as f64 / (g * g))
    }
}

/// For each l, the largest `W2(pi(.|x), pi(.|y)) / |x - y|` over `x_pairs`.
pub fn lipschitz_ratio_scan(
    beta: f64,
    d: u32,
    n: u64,
    l_list: &[usize],
    x_pairs: &[(f64, f64)],
) -> Result<Vec<LipCell>> {
    if let Some(&(x, y)) = x_pairs.iter().find(|(x, y)| x == y || !x.is_finite() || !y.is_finite()) {
        return Err(Error::Invalid(format!("pair ({x}, {y}) must be distinct and finite")));
    }
    l_list
        .iter()
        .map(|&l| {
            let g = prior_gamma(l, beta, d);
            let mut max_ratio: f64 = 0.0;
            for &(x, y) in x_pairs {
                let a = MarginalPosterior::new(n, g, x)?;
                let b = MarginalPosterior::new(n, g, y)?;
                let w = w2_univariate(&a, &b)?.value;
                max_ratio = max_ratio.max(w / (x - y).abs());
            }
            let (regime, bound) = lipschitz_bound(n, l, beta, d);
            Ok(LipCell { n, l, regime, max_ratio, bound, pass: max_ratio <= bound })
        })
        .collect()
}
