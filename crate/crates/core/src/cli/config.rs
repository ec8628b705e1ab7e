//! TOML run configuration.
//!
//! ```toml
//! [model]
//! beta = 1.0
//! d = 1
//! s = 0.0
//!
//! [truth]
//! kind = "poly_decay"      # poly_decay | sparse_spikes | self_similar_random
//! amplitude = 1.0
//!
//! [experiment]
//! n_grid = [1e2, 1e3, 1e4, 1e5, 1e6]
//! replicates = 200
//! seed = 7
//! ```
//!
//! Integer fields accept integral floats so that `1e6` works where a count
//! is expected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lab::{default_l_max, ExperimentConfig};
use crate::truths::{TruthKind, TruthSpec, DEFAULT_DAMPING};

/// A non-negative integer written either as an integer or as an integral
/// float (`1e6`, `"1e6"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Count(pub u64);

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Count;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative integer, possibly in scientific notation")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Count, E> {
                Ok(Count(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Count, E> {
                u64::try_from(v).map(Count).map_err(|_| E::custom(format!("{v} is negative")))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Count, E> {
                // 2^53: beyond this not every integer is representable
                if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9_007_199_254_740_992.0 {
                    Ok(Count(v as u64))
                } else {
                    Err(E::custom(format!("{v} is not a non-negative integer")))
                }
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Count, E> {
                let t = v.trim().replace('_', "");
                if let Ok(u) = t.parse::<u64>() {
                    return Ok(Count(u));
                }
                let f: f64 = t.parse().map_err(|_| E::custom(format!("'{v}' is not a number")))?;
                self.visit_f64(f)
            }
        }
        d.deserialize_any(V)
    }
}

fn narrow<T: TryFrom<u64>>(c: Count, what: &str) -> Result<T> {
    T::try_from(c.0).map_err(|_| Error::Config(format!("{what}={} is out of range", c.0)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    truth: RawTruth,
    experiment: RawExperiment,
    #[serde(default)]
    output: OutputOptions,
    #[serde(default)]
    verify: VerifyOptions,
    #[serde(default)]
    lipscan: RawLipscan,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    beta: f64,
    d: Count,
    s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruth {
    kind: TruthKind,
    #[serde(default = "one")]
    amplitude: f64,
    /// `[[index, value], ...]` for sparse spikes.
    #[serde(default)]
    spikes: Vec<(Count, f64)>,
    decay_damping: Option<f64>,
    #[serde(default)]
    seed: Option<Count>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    n_grid: Vec<Count>,
    replicates: Count,
    l_max: Option<Count>,
    #[serde(default = "default_mc_draws")]
    mc_draws: Count,
    seed: Count,
    #[serde(default = "default_tail_tolerance")]
    tail_tolerance: f64,
}

fn default_mc_draws() -> Count {
    Count(200)
}

fn default_tail_tolerance() -> f64 {
    0.01
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    /// Fault injection: the closed-form normalizer is multiplied by
    /// `1 + normalizer_perturbation` before comparison.
    #[serde(default)]
    pub normalizer_perturbation: f64,
    /// Random posterior cells for the sampler-free Wasserstein checks.
    #[serde(default = "default_random_cells")]
    pub random_cells: usize,
}

fn default_random_cells() -> usize {
    50
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { normalizer_perturbation: 0.0, random_cells: default_random_cells() }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLipscan {
    n: Option<Vec<Count>>,
    l: Option<Vec<Count>>,
    /// Observation pairs in units of the noise level `1/sqrt(n)`.
    pairs: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipscanOptions {
    pub n: Vec<u64>,
    /// `None`: a geometric grid around `L_n` for each n.
    pub l: Option<Vec<usize>>,
    pub pairs: Vec<(f64, f64)>,
}

pub const DEFAULT_LIPSCAN_N: [u64; 3] = [10, 1_000, 100_000];
/// Observation scale: within three noise standard deviations of 0, where
/// `X_l - f0_l` lives. Far from the soft-threshold zone the high-frequency
/// bound does not hold (the posterior is then a shifted Gaussian and the
/// ratio tends to 1); wider pairs can be given in `[lipscan] pairs`.
pub const DEFAULT_LIPSCAN_PAIRS: [(f64, f64); 8] = [
    (0.0, 1e-6),
    (0.0, 0.5),
    (-1.0, 1.0),
    (0.5, 1.5),
    (-3.0, 3.0),
    (1.0, 3.0),
    (2.9, 3.0),
    (-3.0, -2.0),
];

/// A parsed, validated configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub output: OutputOptions,
    pub verify: VerifyOptions,
    pub lipscan: LipscanOptions,
    /// Hex sha256 of the file bytes.
    pub sha256: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let mut cfg = Self::parse(text)?;
        cfg.sha256 = hex::encode(Sha256::digest(&bytes));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let d: u32 = narrow(raw.model.d, "model.d")?;
        let beta = raw.model.beta;
        let n_grid: Vec<u64> = raw.experiment.n_grid.iter().map(|c| c.0).collect();
        let mut truth = match raw.truth.kind {
            TruthKind::PolyDecay => TruthSpec::poly_decay(beta, d, raw.truth.amplitude),
            TruthKind::SparseSpikes => {
                let spikes = raw
                    .truth
                    .spikes
                    .iter()
                    .map(|&(i, v)| Ok((narrow::<usize>(i, "truth.spikes index")?, v)))
                    .collect::<Result<_>>()?;
                TruthSpec::sparse_spikes(beta, d, spikes)
            }
            TruthKind::SelfSimilarRandom => {
                let seed = raw.truth.seed.unwrap_or(Count(0)).0;
                TruthSpec::self_similar_random(beta, d, raw.truth.amplitude, seed)
            }
        };
        truth.decay_damping = raw.truth.decay_damping.unwrap_or(DEFAULT_DAMPING);
        let l_max = match raw.experiment.l_max {
            Some(c) => narrow(c, "experiment.l_max")?,
            None => {
                let n_max = n_grid.iter().copied().max().unwrap_or(1);
                if d == 0 || beta <= 0.0 {
                    1
                } else {
                    default_l_max(beta, d, n_max)
                }
            }
        };
        let experiment = ExperimentConfig {
            beta,
            d,
            s: raw.model.s,
            truth,
            n_grid,
            replicates: narrow(raw.experiment.replicates, "experiment.replicates")?,
            l_max,
            mc_draws: narrow(raw.experiment.mc_draws, "experiment.mc_draws")?,
            seed: raw.experiment.seed.0,
            tail_tolerance: raw.experiment.tail_tolerance,
        };
        experiment.validate().map_err(as_config)?;

        let lipscan = LipscanOptions {
            n: raw
                .lipscan
                .n
                .map(|v| v.iter().map(|c| c.0).collect())
                .unwrap_or_else(|| DEFAULT_LIPSCAN_N.to_vec()),
            l: raw
                .lipscan
                .l
                .map(|v| v.into_iter().map(|c| narrow(c, "lipscan.l")).collect::<Result<_>>())
                .transpose()?,
            pairs: raw.lipscan.pairs.unwrap_or_else(|| DEFAULT_LIPSCAN_PAIRS.to_vec()),
        };
        if lipscan.n.iter().any(|&n| n == 0) {
            return Err(Error::Config("lipscan.n entries must be >= 1".into()));
        }
        if lipscan.l.as_ref().is_some_and(|l| l.iter().any(|&l| l == 0)) {
            return Err(Error::Config("lipscan.l entries must be >= 1".into()));
        }
        if let Some(&(x, y)) = lipscan.pairs.iter().find(|(x, y)| x == y || !x.is_finite() || !y.is_finite()) {
            return Err(Error::Config(format!("lipscan pair ({x}, {y}) must be distinct and finite")));
        }
        if !raw.verify.normalizer_perturbation.is_finite() || raw.verify.normalizer_perturbation <= -1.0 {
            return Err(Error::Config("verify.normalizer_perturbation must be finite and > -1".into()));
        }

        Ok(Self { experiment, output: raw.output, verify: raw.verify, lipscan, sha256: String::new() })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    }
}
