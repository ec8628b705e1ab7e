//! Monte Carlo and exact evaluation of the contraction functionals.
//!
//! Replicate `r` observes `X_l = f0_l + W_l / sqrt(n)` with `W_l` addressed by
//! `(replicate_seed(seed, r), l)`, the same for every n. Replicates run in
//! parallel; their results are collected in replicate order and reduced by
//! pairwise summation, so aggregates do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Prepared};
use super::fit::{rate_fit, RateFit};
use super::lipschitz::LOW_FREQUENCY_BOUND;
use super::thresholds::{default_m_n, thresholds};
use crate::error::{Error, Result};
use crate::posterior::MarginalPosterior;
use crate::rng::{replicate_seed, stream, Purpose};
use crate::seqspace::standard_noise;
use crate::sum::{mean_and_stderr, pairwise_sum};
use crate::wasserstein::w2_univariate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    fn from_samples(xs: &[f64]) -> Self {
        let (mean, stderr) = mean_and_stderr(xs);
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub retained: f64,
    pub tail_bound: f64,
    pub pass: bool,
    /// Smallest truncation the same bound would accept.
    pub suggested_l_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Bound on the expected contribution of coordinates beyond `l_stoch`.
    pub tail_bound: f64,
    pub l_stoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerL {
    pub l: usize,
    pub weight: f64,
    /// Replicate mean of the weighted stochastic term; absent beyond `l_stoch`.
    pub stochastic_term: Option<f64>,
    pub deterministic_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub n: u64,
    pub j_n: usize,
    pub l_n: usize,
    pub stochastic_series: StochasticEstimate,
    pub deterministic_series: f64,
    /// Bound on the deterministic terms beyond `l_max`.
    pub tail_bound: f64,
    pub per_l: Vec<PerL>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub n: u64,
    pub epsilon: McEstimate,
    pub epsilon_sq: f64,
    /// `2 (stochastic + 4 se + tail) + 2 deterministic`.
    pub rhs: f64,
    pub pass: bool,
}

fn sqrt_n(n: u64) -> f64 {
    (n as f64).sqrt()
}

/// Noise vector `W_1..W_l_max` of replicate `r`.
fn replicate_noise(seed: u64, r: usize, len: usize) -> Vec<f64> {
    let rs = replicate_seed(seed, r as u64);
    (1..=len).map(|l| standard_noise(rs, l)).collect()
}

fn deterministic_terms(prep: &Prepared, n: u64) -> Result<Vec<f64>> {
    prep.f0
        .iter()
        .zip(&prep.gammas)
        .zip(&prep.weights)
        .map(|((&f, &g), &w)| Ok(w * MarginalPosterior::new(n, g, f)?.second_moment_about(f)))
        .collect()
}

/// `sum_{l <= l_max} l^{2s/d} E_post[(theta - f0_l)^2 | X_l = f0_l]`, exact.
pub fn deterministic_series(cfg: &ExperimentConfig, n: u64) -> Result<f64> {
    let prep = Prepared::new(cfg)?;
    Ok(pairwise_sum(&deterministic_terms(&prep, n)?))
}

/// Posterior second moment about `f0` is at most the prior one,
/// `2/gamma^2 + f0^2` (the likelihood is a decreasing function of
/// `(theta - f0)^2`), so each discarded term is at most
/// `l^{2s/d} (2 + t0^2) / gamma_l^2` with `t0 = gamma_l f0_l`.
fn deterministic_tail(cfg: &ExperimentConfig, from: usize) -> f64 {
    let t0 = cfg.truth.scaled_tail_sup(from);
    let c = 2.0 + t0 * t0;
    let q = 2.0 * (cfg.beta - cfg.s) / cfg.d as f64;
    c * (from as f64).powf(-q) / q
}

pub fn tail_check(cfg: &ExperimentConfig, n: u64) -> Result<TailCheck> {
    let retained = deterministic_series(cfg, n)?;
    Ok(tail_check_with(cfg, retained))
}

fn tail_check_with(cfg: &ExperimentConfig, retained: f64) -> TailCheck {
    let tail_bound = deterministic_tail(cfg, cfg.l_max);
    let q = 2.0 * (cfg.beta - cfg.s) / cfg.d as f64;
    let c_over_q = tail_bound * (cfg.l_max as f64).powf(q);
    let suggested = (c_over_q / (cfg.tail_tolerance * retained)).powf(1.0 / q).ceil() as usize;
    TailCheck {
        retained,
        tail_bound,
        pass: tail_bound <= cfg.tail_tolerance * retained,
        suggested_l_max: suggested.max(cfg.l_max),
    }
}

fn require_tail(cfg: &ExperimentConfig, prep: &Prepared, n: u64) -> Result<f64> {
    let retained = pairwise_sum(&deterministic_terms(prep, n)?);
    let t = tail_check_with(cfg, retained);
    if !t.pass {
        return Err(Error::Truncation {
            n,
            retained,
            tail_bound: t.tail_bound,
            tolerance: cfg.tail_tolerance,
            suggested_l_max: t.suggested_l_max,
        });
    }
    Ok(retained)
}

/// Per-replicate `W2(Pi(. | X), delta_f0)` for each n in `ns`.
fn dirac_distances(cfg: &ExperimentConfig, prep: &Prepared, ns: &[u64]) -> Result<Vec<Vec<f64>>> {
    let per_rep: Vec<Result<Vec<f64>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let noise = replicate_noise(cfg.seed, r, cfg.l_max);
            let mut terms = vec![0.0; cfg.l_max];
            ns.iter()
                .map(|&n| {
                    let scale = 1.0 / sqrt_n(n);
                    for (i, t) in terms.iter_mut().enumerate() {
                        let f = prep.f0[i];
                        let p = MarginalPosterior::new(n, prep.gammas[i], f + scale * noise[i])?;
                        *t = prep.weights[i] * p.second_moment_about(f);
                    }
                    Ok(pairwise_sum(&terms).sqrt())
                })
                .collect()
        })
        .collect();
    let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_>>()?;
    Ok((0..ns.len()).map(|j| per_rep.iter().map(|v| v[j]).collect()).collect())
}

/// `E W2(Pi(. | X^(n)), delta_f0)` for every n in `ns`, with common random
/// numbers across n.
pub fn epsilon_grid(cfg: &ExperimentConfig, ns: &[u64]) -> Result<Vec<McEstimate>> {
    let prep = Prepared::new(cfg)?;
    for &n in ns {
        require_tail(cfg, &prep, n)?;
    }
    let d = dirac_distances(cfg, &prep, ns)?;
    Ok(d.iter().map(|v| McEstimate::from_samples(v)).collect())
}

pub fn epsilon_n(cfg: &ExperimentConfig, n: u64) -> Result<McEstimate> {
    Ok(epsilon_grid(cfg, &[n])?[0])
}

/// Fraction of posterior draws outside the H^s ball of radius `xi` around
/// f0, averaged over replicates.
pub fn contraction_probability(cfg: &ExperimentConfig, n: u64, xi: f64) -> Result<McEstimate> {
    if !(xi >= 0.0) {
        return Err(Error::Invalid(format!("radius xi={xi} must be >= 0")));
    }
    let prep = Prepared::new(cfg)?;
    require_tail(cfg, &prep, n)?;
    let draws = cfg.mc_draws;
    let fractions: Vec<Result<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let rs = replicate_seed(cfg.seed, r as u64);
            let scale = 1.0 / sqrt_n(n);
            let mut dist_sq = vec![0.0; draws];
            for i in 0..cfg.l_max {
                let l = i + 1;
                let f = prep.f0[i];
                let p = MarginalPosterior::new(n, prep.gammas[i], f + scale * standard_noise(rs, l))?;
                let mut rng = stream(rs, Purpose::PosteriorDraw, l as u64, 0);
                for acc in dist_sq.iter_mut() {
                    let e = p.sample(&mut rng) - f;
                    *acc += prep.weights[i] * e * e;
                }
            }
            let outside = dist_sq.iter().filter(|&&v| v > xi * xi).count();
            Ok(outside as f64 / draws as f64)
        })
        .collect();
    let fractions: Vec<f64> = fractions.into_iter().collect::<Result<_>>()?;
    Ok(McEstimate::from_samples(&fractions))
}

/// Weighted squared W2 between the posteriors at `x` and at `f0` for one
/// coordinate.
pub fn stochastic_term(n: u64, gamma: f64, x: f64, f0: f64) -> Result<f64> {
    if x == f0 {
        return Ok(0.0);
    }
    let a = MarginalPosterior::new(n, gamma, x)?;
    let b = MarginalPosterior::new(n, gamma, f0)?;
    Ok(w2_univariate(&a, &b)?.value.powi(2))
}

/// Bound on `sum_{l > from} l^{2s/d} E W2^2(pi(.|X_l), pi(.|f0_l))` from the
/// Lipschitz constants in x and `E (X_l - f0_l)^2 = 1/n`.
pub fn stochastic_tail(cfg: &ExperimentConfig, n: u64, from: usize) -> f64 {
    let (_, l_n) = thresholds(n, cfg.beta, cfg.d, default_m_n(n));
    let nf = n as f64;
    let low: f64 = (from + 1..=l_n)
        .map(|l| crate::seqspace::sobolev_weight(l, cfg.s, cfg.d) * LOW_FREQUENCY_BOUND.powi(2) / nf)
        .sum();
    // sum_{l > L} 64 n l^{2s/d} / gamma_l^4 <= 64 n L^{1-q} / (q - 1)
    let df = cfg.d as f64;
    let q = 2.0 + 4.0 * cfg.beta / df - 2.0 * cfg.s / df;
    let start = from.max(l_n) as f64;
    low + 64.0 * nf * start.powf(1.0 - q) / (q - 1.0)
}

/// Per-replicate weighted stochastic terms, extended by doubling blocks
/// until the Lipschitz tail bound is within `tail_tolerance` of the
/// running estimate or `l_max` is reached.
fn stochastic_terms(cfg: &ExperimentConfig, prep: &Prepared, n: u64) -> Result<(Vec<Vec<f64>>, usize)> {
    let (_, l_n) = thresholds(n, cfg.beta, cfg.d, default_m_n(n));
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); cfg.replicates];
    let mut start = 0;
    let mut end = (4 * l_n).min(cfg.l_max);
    loop {
        let blocks: Vec<Result<Vec<f64>>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let rs = replicate_seed(cfg.seed, r as u64);
                let scale = 1.0 / sqrt_n(n);
                (start..end)
                    .map(|i| {
                        let f = prep.f0[i];
                        let x = f + scale * standard_noise(rs, i + 1);
                        Ok(prep.weights[i] * stochastic_term(n, prep.gammas[i], x, f)?)
                    })
                    .collect()
            })
            .collect();
        for (acc, block) in terms.iter_mut().zip(blocks) {
            acc.extend(block?);
        }
        let sums: Vec<f64> = terms.iter().map(|t| pairwise_sum(t)).collect();
        let mean = pairwise_sum(&sums) / cfg.replicates as f64;
        if end == cfg.l_max || stochastic_tail(cfg, n, end) <= cfg.tail_tolerance * mean {
            return Ok((terms, end));
        }
        start = end;
        end = (2 * end).min(cfg.l_max);
    }
}

pub fn stochastic_series(cfg: &ExperimentConfig, n: u64) -> Result<StochasticEstimate> {
    let prep = Prepared::new(cfg)?;
    require_tail(cfg, &prep, n)?;
    let (terms, l_stoch) = stochastic_terms(cfg, &prep, n)?;
    Ok(summarize_stochastic(cfg, n, &terms, l_stoch))
}

fn summarize_stochastic(cfg: &ExperimentConfig, n: u64, terms: &[Vec<f64>], l_stoch: usize) -> StochasticEstimate {
    let sums: Vec<f64> = terms.iter().map(|t| pairwise_sum(t)).collect();
    let est = McEstimate::from_samples(&sums);
    StochasticEstimate {
        mean: est.mean,
        stderr: est.stderr,
        tail_bound: stochastic_tail(cfg, n, l_stoch),
        l_stoch,
    }
}

pub fn series_report(cfg: &ExperimentConfig, n: u64, with_per_l: bool) -> Result<SeriesReport> {
    let prep = Prepared::new(cfg)?;
    let det = deterministic_terms(&prep, n)?;
    let retained = pairwise_sum(&det);
    let check = tail_check_with(cfg, retained);
    if !check.pass {
        return Err(Error::Truncation {
            n,
            retained,
            tail_bound: check.tail_bound,
            tolerance: cfg.tail_tolerance,
            suggested_l_max: check.suggested_l_max,
        });
    }
    let (terms, l_stoch) = stochastic_terms(cfg, &prep, n)?;
    let (j_n, l_n) = thresholds(n, cfg.beta, cfg.d, default_m_n(n));
    let per_l = if with_per_l {
        (0..cfg.l_max)
            .map(|i| PerL {
                l: i + 1,
                weight: prep.weights[i],
                stochastic_term: (i < l_stoch).then(|| {
                    let col: Vec<f64> = terms.iter().map(|t| t[i]).collect();
                    pairwise_sum(&col) / cfg.replicates as f64
                }),
                deterministic_term: det[i],
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(SeriesReport {
        n,
        j_n,
        l_n,
        stochastic_series: summarize_stochastic(cfg, n, &terms, l_stoch),
        deterministic_series: retained,
        tail_bound: check.tail_bound,
        per_l,
    })
}

/// Checks `eps_n^2 <= 2 (stochastic) + 2 (deterministic)` on the replicates of
/// `report`, allowing four standard errors on both Monte Carlo sides.
pub fn decomposition_check(cfg: &ExperimentConfig, report: &SeriesReport) -> Result<DecompositionCheck> {
    let eps = epsilon_n(cfg, report.n)?;
    let s = &report.stochastic_series;
    let epsilon_sq = eps.mean * eps.mean;
    let rhs = 2.0 * (s.mean + 4.0 * s.stderr + s.tail_bound) + 2.0 * report.deterministic_series;
    let lhs_low = (eps.mean - 4.0 * eps.stderr).max(0.0).powi(2);
    Ok(DecompositionCheck { n: report.n, epsilon: eps, epsilon_sq, rhs, pass: lhs_low <= rhs })
}

/// Fit of `ln eps_n` against `ln n` over the configured grid.
pub fn epsilon_rate(cfg: &ExperimentConfig) -> Result<(Vec<McEstimate>, RateFit)> {
    let eps = epsilon_grid(cfg, &cfg.n_grid)?;
    let pts: Vec<(f64, f64)> = cfg.n_grid.iter().zip(&eps).map(|(&n, e)| (n as f64, e.mean)).collect();
    Ok((eps.clone(), rate_fit(&pts, cfg.rate_exponent())?))
}

/// Fit of the deterministic series against `-2 (beta - s)/(2 beta + d)`.
pub fn deterministic_rate(cfg: &ExperimentConfig) -> Result<(Vec<f64>, RateFit)> {
    let prep = Prepared::new(cfg)?;
    let vals: Vec<f64> = cfg
        .n_grid
        .iter()
        .map(|&n| Ok(pairwise_sum(&deterministic_terms(&prep, n)?)))
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = cfg.n_grid.iter().zip(&vals).map(|(&n, &v)| (n as f64, v)).collect();
    Ok((vals, rate_fit(&pts, 2.0 * cfg.rate_exponent())?))
}

/// Rate of `E W2(Pi(.|X), delta_f0)` in `H^{order}`: the sequence-space
/// certificate for plug-in estimation of derivatives of that order.
pub fn derivative_rate_experiment(cfg: &ExperimentConfig, order: f64) -> Result<RateFit> {
    if !(order >= 0.0 && cfg.beta > order + cfg.d as f64 / 2.0) {
        return Err(Error::Invalid(format!(
            "derivative order {order} requires beta={} > order + d/2",
            cfg.beta
        )));
    }
    let mut c = cfg.clone();
    c.s = order;
    Ok(epsilon_rate(&c)?.1)
}
