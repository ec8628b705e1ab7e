//! Ground-truth coefficient sequences in B^beta_1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::seqspace::CoefSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    /// `amplitude * l^{-beta/d - 1/2} * (1 + ln l)^{-damping}`
    PolyDecay,
    /// Finitely many nonzero coefficients.
    SparseSpikes,
    /// PolyDecay magnitudes with independent random signs.
    SelfSimilarRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub kind: TruthKind,
    pub beta: f64,
    pub d: u32,
    pub amplitude: f64,
    /// (1-based index, value) pairs for `SparseSpikes`.
    pub spike_positions: Vec<(usize, f64)>,
    pub decay_damping: f64,
    pub seed: u64,
}

pub const DEFAULT_DAMPING: f64 = 2.0;

impl TruthSpec {
    pub fn poly_decay(beta: f64, d: u32, amplitude: f64) -> Self {
        Self {
            kind: TruthKind::PolyDecay,
            beta,
            d,
            amplitude,
            spike_positions: Vec::new(),
            decay_damping: DEFAULT_DAMPING,
            seed: 0,
        }
    }

    pub fn sparse_spikes(beta: f64, d: u32, spikes: Vec<(usize, f64)>) -> Self {
        Self {
            kind: TruthKind::SparseSpikes,
            beta,
            d,
            amplitude: 1.0,
            spike_positions: spikes,
            decay_damping: DEFAULT_DAMPING,
            seed: 0,
        }
    }

    pub fn self_similar_random(beta: f64, d: u32, amplitude: f64, seed: u64) -> Self {
        Self {
            kind: TruthKind::SelfSimilarRandom,
            beta,
            d,
            amplitude,
            spike_positions: Vec::new(),
            decay_damping: DEFAULT_DAMPING,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Invalid("truth dimension d must be >= 1".into()));
        }
        if !(self.beta > self.d as f64 / 2.0) {
            return Err(Error::Invalid(format!(
                "truth smoothness beta={} must exceed d/2={}",
                self.beta,
                self.d as f64 / 2.0
            )));
        }
        match self.kind {
            TruthKind::PolyDecay | TruthKind::SelfSimilarRandom => {
                if !(self.decay_damping > 1.0) {
                    return Err(Error::Invalid(format!(
                        "decay_damping={} must exceed 1 for B^beta_1 membership",
                        self.decay_damping
                    )));
                }
                if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
                    return Err(Error::Invalid("amplitude must be positive".into()));
                }
            }
            TruthKind::SparseSpikes => {
                if let Some(&(l, v)) = self.spike_positions.iter().find(|(l, v)| *l == 0 || !v.is_finite()) {
                    return Err(Error::Invalid(format!("bad spike ({l}, {v})")));
                }
            }
        }
        Ok(())
    }

    /// Magnitude envelope `amplitude * l^{-beta/d-1/2} (1+ln l)^{-damping}`.
    pub fn envelope(&self, l: usize) -> f64 {
        let lf = l as f64;
        self.amplitude
            * lf.powf(-self.beta / self.d as f64 - 0.5)
            * (1.0 + lf.ln()).powf(-self.decay_damping)
    }

    /// Upper bound on `|t_{0,l}| = l^{1/2+beta/d} |f_{0,l}|` over all l > `l`.
    pub fn scaled_tail_sup(&self, l: usize) -> f64 {
        match self.kind {
            TruthKind::PolyDecay | TruthKind::SelfSimilarRandom => {
                self.amplitude * (1.0 + ((l + 1) as f64).ln()).powf(-self.decay_damping)
            }
            TruthKind::SparseSpikes => {
                let e = 0.5 + self.beta / self.d as f64;
                self.spike_positions
                    .iter()
                    .filter(|(i, _)| *i > l)
                    .map(|(i, v)| (*i as f64).powf(e) * v.abs())
                    .fold(0.0, f64::max)
            }
        }
    }
}

pub fn materialize(spec: &TruthSpec, l_max: usize) -> Result<CoefSeq> {
    spec.validate()?;
    if l_max == 0 {
        return Err(Error::Invalid("l_max must be >= 1".into()));
    }
    let coefs = match spec.kind {
        TruthKind::PolyDecay => (1..=l_max).map(|l| spec.envelope(l)).collect(),
        TruthKind::SparseSpikes => {
            let mut c = vec![0.0; l_max];
            for &(l, v) in &spec.spike_positions {
                if l > l_max {
                    return Err(Error::Invalid(format!("spike index {l} beyond l_max={l_max}")));
                }
                c[l - 1] += v;
            }
            c
        }
        TruthKind::SelfSimilarRandom => {
            use rand::Rng;
            (1..=l_max)
                .map(|l| {
                    let mut rng = stream(spec.seed, Purpose::TruthSign, l as u64, 0);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * spec.envelope(l)
                })
                .collect()
        }
    };
    CoefSeq::new(spec.d, coefs)
}
