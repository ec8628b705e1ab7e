//! Functions on [0,1]^d represented by their wavelet coefficient sequences
//! in single-index ordering, truncated at `l_max`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{normal_at, Purpose};
use crate::sum::pairwise_sum;

/// A finite coefficient sequence `(f_1, ..., f_lmax)` on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefSeq {
    d: u32,
    coefs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCoefSeq {
    d: u32,
    coefs: Vec<f64>,
}

impl<'de> Deserialize<'de> for CoefSeq {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCoefSeq::deserialize(de)?;
        CoefSeq::new(raw.d, raw.coefs).map_err(serde::de::Error::custom)
    }
}

impl CoefSeq {
    pub fn new(d: u32, coefs: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("dimension d must be >= 1".into()));
        }
        if coefs.is_empty() {
            return Err(Error::Invalid("l_max must be >= 1".into()));
        }
        if let Some(i) = coefs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("coefficient l={} is not finite", i + 1)));
        }
        Ok(Self { d, coefs })
    }

    pub fn zeros(d: u32, l_max: usize) -> Result<Self> {
        Self::new(d, vec![0.0; l_max])
    }

    /// Unit sequence e_l.
    pub fn unit(d: u32, l: usize, l_max: usize) -> Result<Self> {
        if l == 0 || l > l_max {
            return Err(Error::Invalid(format!("unit index {l} outside 1..={l_max}")));
        }
        let mut c = vec![0.0; l_max];
        c[l - 1] = 1.0;
        Self::new(d, c)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn l_max(&self) -> usize {
        self.coefs.len()
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    /// Coefficient `f_l` (1-based), zero beyond `l_max`.
    pub fn get(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        self.coefs.get(l - 1).copied().unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["l", "value"])?;
        for (i, c) in self.coefs.iter().enumerate() {
            wr.write_record([(i + 1).to_string(), c.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the `l,value` CSV form. Rows must be in order l = 1, 2, ...
    pub fn read_csv<R: Read>(r: R, d: u32) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["l", "value"] {
            return Err(Error::Invalid(format!("expected header `l,value`, got {headers:?}")));
        }
        let mut coefs = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let l: usize = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("row {}: bad index: {e}", i + 1)))?;
            if l != i + 1 {
                return Err(Error::Invalid(format!("row {}: expected l={}, got {l}", i + 1, i + 1)));
            }
            let v: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("row {}: bad value: {e}", i + 1)))?;
            coefs.push(v);
        }
        Self::new(d, coefs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Besov index `(s, p)`; `p = 2` gives the Sobolev space H^s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovIndex {
    s: f64,
    p: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Invalid(format!("smoothness s must be >= 0, got {s}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Invalid(format!("integrability p must be >= 1, got {p}")));
        }
        Ok(Self { s, p })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Gaussian sequence model `X_l = f_l + W_l / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseModel {
    n: u64,
}

impl NoiseModel {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("sample size n must be >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Weight `l^{2s/d}` of coordinate l in the H^s norm.
#[inline]
pub fn sobolev_weight(l: usize, s: f64, d: u32) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (l as f64).powf(2.0 * s / d as f64)
    }
}

/// Truncated Besov norm `(sum_l l^{p(s/d+1/2)-1} |f_l|^p)^{1/p}`.
pub fn besov_norm(f: &CoefSeq, idx: BesovIndex) -> f64 {
    let (s, p) = (idx.s, idx.p);
    let expo = p * (s / f.d as f64 + 0.5) - 1.0;
    let terms: Vec<f64> = f
        .coefs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let l = (i + 1) as f64;
            let w = if expo == 0.0 { 1.0 } else { l.powf(expo) };
            w * if p == 1.0 { c.abs() } else if p == 2.0 { c * c } else { c.abs().powf(p) }
        })
        .collect();
    let total = pairwise_sum(&terms);
    if p == 1.0 {
        total
    } else if p == 2.0 {
        total.sqrt()
    } else {
        total.powf(1.0 / p)
    }
}

/// H^s distance `(sum_l l^{2s/d} |f_l - g_l|^2)^{1/2}`, shorter sequence
/// zero-padded.
pub fn sobolev_distance(f: &CoefSeq, g: &CoefSeq, s: f64) -> Result<f64> {
    if f.d != g.d {
        return Err(Error::DimensionMismatch(f.d, g.d));
    }
    if !(s >= 0.0) {
        return Err(Error::Invalid(format!("s must be >= 0, got {s}")));
    }
    let len = f.l_max().max(g.l_max());
    let terms: Vec<f64> = (1..=len)
        .map(|l| {
            let diff = f.get(l) - g.get(l);
            sobolev_weight(l, s, f.d) * diff * diff
        })
        .collect();
    Ok(pairwise_sum(&terms).sqrt())
}

/// Draws `X_l = f0_l + Z_l / sqrt(n)` with `Z_l` addressed by `(seed, l)`.
pub fn sample_observation(f0: &CoefSeq, model: NoiseModel, seed: u64) -> CoefSeq {
    let scale = 1.0 / (model.n as f64).sqrt();
    let coefs = f0
        .coefs
        .iter()
        .enumerate()
        .map(|(i, &c)| c + scale * standard_noise(seed, i + 1))
        .collect();
    CoefSeq { d: f0.d, coefs }
}

/// The standard normal `W_l` driving coordinate l under `seed`.
#[inline]
pub fn standard_noise(seed: u64, l: usize) -> f64 {
    normal_at(seed, Purpose::Observation, l as u64, 0)
}
