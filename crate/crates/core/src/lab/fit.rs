use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub theoretical_exponent: f64,
    pub abs_slope_gap: f64,
}

/// Least-squares fit of `ln v = intercept + slope ln n`.
pub fn rate_fit(values: &[(f64, f64)], theoretical_exponent: f64) -> Result<RateFit> {
    if values.len() < 4 {
        return Err(Error::Invalid(format!("rate fit needs >= 4 points, got {}", values.len())));
    }
    if let Some(&(n, v)) = values.iter().find(|(n, v)| !(*v > 0.0 && *n > 0.0)) {
        return Err(Error::Invalid(format!("rate fit needs positive data, got ({n}, {v})")));
    }
    let k = values.len() as f64;
    let xs: Vec<f64> = values.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        theoretical_exponent,
        abs_slope_gap: (slope - theoretical_exponent).abs(),
    })
}
