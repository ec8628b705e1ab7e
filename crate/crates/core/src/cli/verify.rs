//! Numerical self-checks run by `besov-contract verify`.
//!
//! Each check compares a closed-form route against an independent one
//! (quadrature, a reference table or a second formula) and reports the
//! largest discrepancy seen.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::VerifyOptions;
use crate::error::Result;
use crate::oracle::{cdf_by_quadrature, posterior_by_quadrature, stress_grid, GridCell};
use crate::posterior::MarginalPosterior;
use crate::rng::{stream, Purpose};
use crate::specfun::{erfc, erfcx};
use crate::wasserstein::{w2_to_dirac, w2_univariate, Gaussian, PointMass};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl CheckResult {
    fn from_errors(name: &'static str, tolerance: f64, errors: &[f64]) -> Self {
        // NaN counts as an infinite error
        let max_error = errors.iter().fold(0.0_f64, |m, &e| if e.is_nan() { f64::INFINITY } else { m.max(e) });
        Self { name, pass: max_error <= tolerance, max_error, tolerance, cases: errors.len() }
    }
}

/// erfc and erfcx at reference points, 40-digit values.
const ERFC_TABLE: [(f64, f64); 8] = [
    (-3.0, 1.999_977_909_503_001_4),
    (-1.0, 1.842_700_792_949_714_9),
    (0.5, 0.479_500_122_186_953_46),
    (1.0, 0.157_299_207_050_285_13),
    (2.0, 4.677_734_981_047_265_8e-3),
    (5.0, 1.537_459_794_428_034_9e-12),
    (10.0, 2.088_487_583_762_544_8e-45),
    (26.0, 5.663_192_408_856_142_8e-296),
];
const ERFCX_TABLE: [(f64, f64); 5] = [
    (-1.0, 5.008_980_080_762_283_5),
    (0.5, 0.615_690_344_192_925_87),
    (5.0, 0.110_704_637_733_068_63),
    (30.0, 0.018_795_888_861_416_751),
    (1000.0, 5.641_893_014_533_876_5e-4),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn specfun_reference() -> Result<CheckResult> {
    let mut errs = Vec::new();
    for &(z, v) in &ERFC_TABLE {
        errs.push(rel(erfc(z)?, v));
    }
    for &(z, v) in &ERFCX_TABLE {
        errs.push(rel(erfcx(z)?, v));
    }
    Ok(CheckResult::from_errors("specfun_reference", 1e-13, &errs))
}

struct CellOutcome {
    normalizer: f64,
    reconstruction: f64,
    moments: f64,
    cdf: Option<f64>,
}

fn stress_cell(i: usize, c: GridCell, perturbation: f64) -> Result<CellOutcome> {
    let p = MarginalPosterior::with_precision(c.n, c.gamma, c.x)?;
    let q = posterior_by_quadrature(c.n, c.gamma, c.x, c.x);
    let log_z = p.log_normalizer() + perturbation.ln_1p();
    let normalizer = ((log_z - q.log_z).exp() - 1.0).abs();

    let mean = p.mean();
    let sd = p.variance().sqrt();
    let mix = p.mixture();
    let mut reconstruction = (mix.w_plus + mix.w_minus - 1.0).abs();
    for theta in [p.map_estimate(), mean, mean - sd, mean + sd, mean - 3.0 * sd, mean + 3.0 * sd] {
        reconstruction = reconstruction.max((mix.log_density(theta) - p.log_density(theta)).abs());
    }

    let mean_err = (mean - q.mean).abs() / q.mean.abs().max(q.variance.sqrt());
    let moments = mean_err.max(rel(p.variance(), q.variance)).max(rel(p.second_moment_about(c.x), q.second_moment));

    // quadrature CDFs are the slowest oracle; a quarter of the grid suffices
    let cdf = (i % 4 == 0).then(|| {
        [mean - 2.0 * sd, mean, mean + 2.0 * sd]
            .iter()
            .map(|&t| (p.cdf(t) - cdf_by_quadrature(c.n, c.gamma, c.x, t)).abs())
            .fold(0.0, f64::max)
    });
    Ok(CellOutcome { normalizer, reconstruction, moments, cdf })
}

fn random_cells(seed: u64, count: usize) -> Vec<GridCell> {
    let mut rng = stream(seed, Purpose::Verify, 0, 0);
    (0..count)
        .map(|_| {
            let n = 10f64.powf(rng.random_range(0.0..6.0)).round();
            let gamma = 10f64.powf(rng.random_range(-2.0..6.0));
            let x = rng.random_range(-20.0..20.0) / n.sqrt();
            GridCell { n, gamma, x }
        })
        .collect()
}

fn quantile_roundtrip(cells: &[GridCell]) -> Result<CheckResult> {
    let levels = [1e-10, 1e-3, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-10];
    let mut errs = Vec::new();
    for c in cells {
        let p = MarginalPosterior::with_precision(c.n, c.gamma, c.x)?;
        for &u in &levels {
            errs.push((p.cdf(p.quantile(u)?) - u).abs());
        }
    }
    Ok(CheckResult::from_errors("quantile_roundtrip", 1e-12, &errs))
}

fn w2_gaussian(seed: u64) -> Result<CheckResult> {
    let mut rng = stream(seed, Purpose::Verify, 1, 0);
    let mut errs = Vec::new();
    for _ in 0..20 {
        let a = Gaussian { mean: rng.random_range(-5.0..5.0), sd: 10f64.powf(rng.random_range(-3.0..1.0)) };
        let b = Gaussian { mean: rng.random_range(-5.0..5.0), sd: 10f64.powf(rng.random_range(-3.0..1.0)) };
        let exact = ((a.mean - b.mean).powi(2) + (a.sd - b.sd).powi(2)).sqrt();
        errs.push(rel(w2_univariate(a, b)?.value, exact));
    }
    Ok(CheckResult::from_errors("w2_gaussian_closed_form", 1e-8, &errs))
}

fn w2_dirac(cells: &[GridCell]) -> Result<CheckResult> {
    let errs = cells
        .par_iter()
        .map(|c| {
            let p = MarginalPosterior::with_precision(c.n, c.gamma, c.x)?;
            let centre = c.x + 0.5 / c.n.sqrt();
            Ok(rel(w2_univariate(&p, PointMass(centre))?.value, w2_to_dirac(&p, centre)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckResult::from_errors("w2_dirac_dual_route", 1e-6, &errs))
}

/// Identity, symmetry and triangle inequality on triples sharing `(n, gamma)`.
fn w2_metric(cells: &[GridCell]) -> Result<CheckResult> {
    let errs = cells
        .par_iter()
        .map(|c| {
            let h = 1.0 / c.n.sqrt();
            let a = MarginalPosterior::with_precision(c.n, c.gamma, c.x)?;
            let b = MarginalPosterior::with_precision(c.n, c.gamma, c.x + 0.7 * h)?;
            let d = MarginalPosterior::with_precision(c.n, c.gamma, c.x - 1.9 * h)?;
            let ab = w2_univariate(&a, &b)?.value;
            let ba = w2_univariate(&b, &a)?.value;
            let bd = w2_univariate(&b, &d)?.value;
            let ad = w2_univariate(&a, &d)?.value;
            let aa = w2_univariate(&a, &a)?.value;
            let scale = ab.max(bd).max(ad).max(f64::MIN_POSITIVE);
            let identity = aa / scale;
            let symmetry = (ab - ba).abs() / scale;
            let triangle = ((ad - ab - bd) / scale).max(0.0);
            Ok(identity.max(symmetry).max(triangle))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckResult::from_errors("w2_metric_properties", 1e-6, &errs))
}

/// Runs every check. `seed` drives the random cells.
pub fn run_checks(opts: &VerifyOptions, seed: u64) -> Result<Vec<CheckResult>> {
    let grid = stress_grid();
    let outcomes = grid
        .par_iter()
        .enumerate()
        .map(|(i, &c)| stress_cell(i, c, opts.normalizer_perturbation))
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&CellOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();
    let cdf_errs: Vec<f64> = outcomes.iter().filter_map(|o| o.cdf).collect();
    let cells = random_cells(seed, opts.random_cells);

    Ok(vec![
        specfun_reference()?,
        CheckResult::from_errors("normalizer_identity", 1e-9, &pick(|o| o.normalizer)),
        CheckResult::from_errors("mixture_reconstruction", 1e-9, &pick(|o| o.reconstruction)),
        CheckResult::from_errors("posterior_moments", 1e-8, &pick(|o| o.moments)),
        CheckResult::from_errors("cdf_vs_quadrature", 1e-9, &cdf_errs),
        quantile_roundtrip(&cells)?,
        w2_gaussian(seed)?,
        w2_dirac(&cells)?,
        w2_metric(&cells)?,
    ])
}
