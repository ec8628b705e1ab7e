use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::prior_gamma;
use crate::seqspace::sobolev_weight;
use crate::truths::{materialize, TruthSpec};

/// Full specification of a contraction experiment. The prior regularity
/// equals the truth smoothness `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub d: u32,
    pub s: f64,
    pub truth: TruthSpec,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub l_max: usize,
    /// Posterior draws per replicate for contraction probabilities.
    pub mc_draws: usize,
    pub seed: u64,
    pub tail_tolerance: f64,
}

/// `ceil(8 n_max^{d/(2 beta + d)})`.
pub fn default_l_max(beta: f64, d: u32, n_max: u64) -> usize {
    let df = d as f64;
    (8.0 * (n_max as f64).powf(df / (2.0 * beta + df))).ceil() as usize
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        let half_d = self.d as f64 / 2.0;
        if !(self.beta > half_d && self.beta.is_finite()) {
            return bad(format!("beta={} must exceed d/2={half_d}", self.beta));
        }
        if !(self.s >= 0.0 && self.s < self.beta - half_d) {
            return bad(format!("s={} must lie in [0, beta - d/2) = [0, {})", self.s, self.beta - half_d));
        }
        if self.truth.d != self.d || self.truth.beta != self.beta {
            return bad(format!(
                "truth (beta={}, d={}) must match the prior (beta={}, d={})",
                self.truth.beta, self.truth.d, self.beta, self.d
            ));
        }
        self.truth.validate()?;
        if self.n_grid.len() < 4 {
            return bad(format!("n_grid needs >= 4 points, got {}", self.n_grid.len()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be positive and strictly increasing".into());
        }
        if self.replicates == 0 || self.l_max == 0 || self.mc_draws == 0 {
            return bad("replicates, l_max and mc_draws must be >= 1".into());
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return bad(format!("tail_tolerance={} must lie in (0, 1)", self.tail_tolerance));
        }
        Ok(())
    }

    /// Exponent of `n` in the contraction rate, `-(beta - s)/(2 beta + d)`.
    pub fn rate_exponent(&self) -> f64 {
        -(self.beta - self.s) / (2.0 * self.beta + self.d as f64)
    }
}

/// Per-coordinate quantities shared by all replicates.
pub(crate) struct Prepared {
    pub f0: Vec<f64>,
    pub weights: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let f0 = materialize(&cfg.truth, cfg.l_max)?.coefs().to_vec();
        let weights = (1..=cfg.l_max).map(|l| sobolev_weight(l, cfg.s, cfg.d)).collect();
        let gammas = (1..=cfg.l_max).map(|l| prior_gamma(l, cfg.beta, cfg.d)).collect();
        Ok(Self { f0, weights, gammas })
    }
}
