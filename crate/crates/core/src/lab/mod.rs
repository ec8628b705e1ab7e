//! Contraction experiments: thresholds, Monte Carlo functionals, the
//! two-series decomposition, Lipschitz scans and rate fits.

mod config;
mod fit;
mod lipschitz;
mod series;
mod thresholds;

pub use config::{default_l_max, ExperimentConfig};
pub use fit::{rate_fit, RateFit};
pub use lipschitz::{lipschitz_bound, lipschitz_ratio_scan, LipCell, Regime, LOW_FREQUENCY_BOUND};
pub use series::{
    contraction_probability, decomposition_check, derivative_rate_experiment, deterministic_rate,
    deterministic_series, epsilon_grid, epsilon_n, epsilon_rate, series_report, stochastic_series,
    stochastic_tail, stochastic_term, tail_check, DecompositionCheck, McEstimate, PerL,
    SeriesReport, StochasticEstimate, TailCheck,
};
pub use thresholds::{default_m_n, thresholds};
