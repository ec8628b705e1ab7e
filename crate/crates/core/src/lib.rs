//! Bayesian inference in the Gaussian sequence model under Besov-Laplace
//! priors, with the numerical machinery needed to measure posterior
//! contraction: closed-form marginal posteriors, univariate Wasserstein
//! distances, and a deterministic Monte Carlo experiment engine.

pub mod cli;
pub mod error;
pub mod lab;
pub mod oracle;
pub mod posterior;
pub mod rng;
pub mod seqspace;
pub mod specfun;
pub mod sum;
pub mod truncnorm;
pub mod truths;
pub mod wasserstein;

pub use error::{Error, Result};
