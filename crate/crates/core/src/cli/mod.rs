//! The `besov-contract` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error,
//! 3 truncation or numerical resource failure.

pub mod config;
pub mod manifest;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use self::config::RunConfig;
use self::manifest::{run_id, OutputDir};
use crate::error::{Error, Result};
use crate::lab::{
    decomposition_check, default_m_n, epsilon_rate, lipschitz_ratio_scan, series_report, thresholds, Regime,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "besov-contract", version, about = "Posterior contraction experiments for Besov-Laplace priors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the numerical oracle suites and write verify_report.json.
    Verify(CommonArgs),
    /// Estimate the contraction rate over n_grid; writes rates.csv and ratefit.json.
    Rates(CommonArgs),
    /// Split the squared rate into stochastic and deterministic series; writes series.csv.
    Decompose(CommonArgs),
    /// Measure Lipschitz ratios of the posterior map; writes lipscan.csv.
    Lipscan(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides experiment.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "BESOV_CONTRACT_THREADS")]
    pub threads: Option<NonZeroUsize>,
    /// Overrides output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Whether a command that ran to completion found what it checks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailed,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Rates(_) => "rates",
            Command::Decompose(_) => "decompose",
            Command::Lipscan(_) => "lipscan",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Verify(a) | Command::Rates(a) | Command::Decompose(a) | Command::Lipscan(a) => a,
        }
    }
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::CheckFailed) => EXIT_CHECK_FAILED,
        Err(Error::Config(_)) => EXIT_CONFIG,
        Err(Error::Truncation { .. } | Error::NonConvergence { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_)) => {
            EXIT_RESOURCE
        }
        Err(_) => EXIT_CHECK_FAILED,
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = execute(&cli.command);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}

pub fn execute(command: &Command) -> Result<Outcome> {
    let args = command.args();
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.map_or(0, NonZeroUsize::get))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = cfg.experiment.seed;
    let mut out = OutputDir::create(&dir, run_id(&cfg.sha256, seed, command.name()))?;
    let outcome = pool.install(|| match command {
        Command::Verify(_) => cmd_verify(&cfg, &mut out),
        Command::Rates(_) => cmd_rates(&cfg, &mut out),
        Command::Decompose(_) => cmd_decompose(&cfg, &mut out),
        Command::Lipscan(_) => cmd_lipscan(&cfg, &mut out),
    })?;
    out.finish(command.name(), &cfg.sha256, seed)?;
    Ok(outcome)
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    run_id: &'a str,
    all_pass: bool,
    checks: &'a [verify::CheckResult],
}

fn cmd_verify(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let checks = verify::run_checks(&cfg.verify, cfg.experiment.seed)?;
    let all_pass = checks.iter().all(|c| c.pass);
    let run_id = out.run_id().to_string();
    out.json("verify_report.json", &VerifyReport { run_id: &run_id, all_pass, checks: &checks })?;
    let mut so = std::io::stdout().lock();
    writeln!(so, "{:<26} {:>6} {:>12} {:>10} {:>6}", "check", "status", "max_error", "tolerance", "cases")?;
    for c in &checks {
        writeln!(
            so,
            "{:<26} {:>6} {:>12.3e} {:>10.0e} {:>6}",
            c.name,
            pass_fail(c.pass),
            c.max_error,
            c.tolerance,
            c.cases
        )?;
    }
    Ok(if all_pass { Outcome::Pass } else { Outcome::CheckFailed })
}

#[derive(Serialize)]
struct RateRow {
    n: u64,
    epsilon: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct RateFitReport<'a> {
    run_id: &'a str,
    slope: f64,
    intercept: f64,
    r_squared: f64,
    theoretical_exponent: f64,
    abs_slope_gap: f64,
    n_points: usize,
}

fn cmd_rates(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let (eps, fit) = epsilon_rate(e)?;
    let rows: Vec<RateRow> =
        e.n_grid.iter().zip(&eps).map(|(&n, m)| RateRow { n, epsilon: m.mean, stderr: m.stderr }).collect();
    out.csv("rates.csv", &rows)?;
    let run_id = out.run_id().to_string();
    out.json(
        "ratefit.json",
        &RateFitReport {
            run_id: &run_id,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            theoretical_exponent: fit.theoretical_exponent,
            abs_slope_gap: fit.abs_slope_gap,
            n_points: rows.len(),
        },
    )?;
    let mut so = std::io::stdout().lock();
    writeln!(so, "{:>10} {:>14} {:>12}", "n", "epsilon", "stderr")?;
    for r in &rows {
        writeln!(so, "{:>10} {:>14.6e} {:>12.3e}", r.n, r.epsilon, r.stderr)?;
    }
    writeln!(
        so,
        "slope {:.4}  theory {:.4}  gap {:.4}  r^2 {:.5}",
        fit.slope, fit.theoretical_exponent, fit.abs_slope_gap, fit.r_squared
    )?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct SeriesRow {
    n: u64,
    j_n: usize,
    l_n: usize,
    stochastic: f64,
    stochastic_stderr: f64,
    stochastic_tail_bound: f64,
    l_stoch: usize,
    deterministic: f64,
    deterministic_tail_bound: f64,
    epsilon: f64,
    epsilon_stderr: f64,
    epsilon_sq: f64,
    rhs: f64,
    inequality: &'static str,
}

#[derive(Serialize)]
struct PerLRow {
    n: u64,
    l: usize,
    weight: f64,
    stochastic_term: Option<f64>,
    deterministic_term: f64,
}

fn cmd_decompose(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let n_min = e.n_grid[0];
    let mut rows = Vec::with_capacity(e.n_grid.len());
    let mut per_l = Vec::new();
    for &n in &e.n_grid {
        let rep = series_report(e, n, n == n_min)?;
        let chk = decomposition_check(e, &rep)?;
        per_l.extend(rep.per_l.iter().map(|p| PerLRow {
            n,
            l: p.l,
            weight: p.weight,
            stochastic_term: p.stochastic_term,
            deterministic_term: p.deterministic_term,
        }));
        let s = rep.stochastic_series;
        rows.push(SeriesRow {
            n,
            j_n: rep.j_n,
            l_n: rep.l_n,
            stochastic: s.mean,
            stochastic_stderr: s.stderr,
            stochastic_tail_bound: s.tail_bound,
            l_stoch: s.l_stoch,
            deterministic: rep.deterministic_series,
            deterministic_tail_bound: rep.tail_bound,
            epsilon: chk.epsilon.mean,
            epsilon_stderr: chk.epsilon.stderr,
            epsilon_sq: chk.epsilon_sq,
            rhs: chk.rhs,
            inequality: pass_fail(chk.pass),
        });
    }
    out.csv("series.csv", &rows)?;
    out.csv("series_per_l.csv", &per_l)?;
    let mut so = std::io::stdout().lock();
    writeln!(
        so,
        "{:>10} {:>5} {:>5} {:>12} {:>12} {:>12} {:>12} {:>5}",
        "n", "J_n", "L_n", "stochastic", "determin.", "eps^2", "rhs", "ineq"
    )?;
    for r in &rows {
        writeln!(
            so,
            "{:>10} {:>5} {:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>5}",
            r.n, r.j_n, r.l_n, r.stochastic, r.deterministic, r.epsilon_sq, r.rhs, r.inequality
        )?;
    }
    Ok(if rows.iter().all(|r| r.inequality == "pass") { Outcome::Pass } else { Outcome::CheckFailed })
}

#[derive(Serialize)]
struct LipRow {
    n: u64,
    l: usize,
    regime: Regime,
    ratio: f64,
    bound: f64,
    pass: bool,
}

/// Powers of two up to `64 L_n`, plus `L_n` and `L_n + 1`.
fn default_l_grid(l_n: usize) -> Vec<usize> {
    let top = 64 * l_n.max(1);
    let mut ls: Vec<usize> = std::iter::successors(Some(1usize), |&l| Some(2 * l)).take_while(|&l| l <= top).collect();
    ls.extend([l_n.max(1), l_n + 1]);
    ls.sort_unstable();
    ls.dedup();
    ls
}

fn cmd_lipscan(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let mut rows = Vec::new();
    for &n in &cfg.lipscan.n {
        let (_, l_n) = thresholds(n, e.beta, e.d, default_m_n(n));
        let ls = cfg.lipscan.l.clone().unwrap_or_else(|| default_l_grid(l_n));
        let h = 1.0 / (n as f64).sqrt();
        let pairs: Vec<(f64, f64)> = cfg.lipscan.pairs.iter().map(|&(a, b)| (a * h, b * h)).collect();
        for c in lipschitz_ratio_scan(e.beta, e.d, n, &ls, &pairs)? {
            rows.push(LipRow { n: c.n, l: c.l, regime: c.regime, ratio: c.max_ratio, bound: c.bound, pass: c.pass });
        }
    }
    out.csv("lipscan.csv", &rows)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    println!("{} cells, {} failed, largest ratio {:.4}", rows.len(), failed, max_ratio);
    Ok(if failed == 0 { Outcome::Pass } else { Outcome::CheckFailed })
}
