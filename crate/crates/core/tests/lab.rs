use besov_contract::lab::{
    contraction_probability, default_m_n, deterministic_series, epsilon_grid, epsilon_n, rate_fit, series_report,
    stochastic_series, stochastic_term, tail_check, thresholds, ExperimentConfig,
};
use besov_contract::posterior::{prior_gamma, MarginalPosterior};
use besov_contract::seqspace::sobolev_weight;
use besov_contract::truths::TruthSpec;
use besov_contract::Error;

fn config(beta: f64, s: f64, l_max: usize, replicates: usize) -> ExperimentConfig {
    ExperimentConfig {
        beta,
        d: 1,
        s,
        truth: TruthSpec::poly_decay(beta, 1, 1.0),
        n_grid: vec![100, 1_000, 10_000, 100_000, 1_000_000],
        replicates,
        l_max,
        mc_draws: 200,
        seed: 3,
        tail_tolerance: 0.01,
    }
}

#[test]
fn contraction_probability_limits() {
    let cfg = config(1.0, 0.0, 2000, 16);
    assert_eq!(contraction_probability(&cfg, 1000, 0.0).unwrap().mean, 1.0);
    assert_eq!(contraction_probability(&cfg, 1000, 1e3).unwrap().mean, 0.0);
    assert!(matches!(contraction_probability(&cfg, 1000, -1.0), Err(Error::Invalid(_))));
}

#[test]
fn contraction_probability_at_ten_epsilon_is_small() {
    let cfg = config(1.0, 0.0, 2000, 32);
    let n = 100_000;
    let eps = epsilon_n(&cfg, n).unwrap().mean;
    let p = contraction_probability(&cfg, n, 10.0 * eps).unwrap();
    assert!(p.mean < 0.01, "{p:?}");
}

#[test]
fn epsilon_decreases_in_n() {
    let cfg = config(1.0, 0.0, 4000, 50);
    let eps = epsilon_grid(&cfg, &cfg.n_grid).unwrap();
    assert!(eps.windows(2).all(|w| w[1].mean < w[0].mean), "{eps:?}");
}

#[test]
fn doubling_replicates_is_consistent() {
    let a = config(1.0, 0.0, 2000, 100);
    let mut b = a.clone();
    b.replicates = 200;
    let (ea, eb) = (epsilon_n(&a, 10_000).unwrap(), epsilon_n(&b, 10_000).unwrap());
    // b shares its first 100 replicates with a, so this is conservative
    let se = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
    assert!((ea.mean - eb.mean).abs() < 3.0 * se, "{ea:?} {eb:?}");
}

#[test]
fn deterministic_series_is_bitwise_reproducible() {
    let cfg = config(2.0, 0.5, 400, 1);
    let a = deterministic_series(&cfg, 12_345).unwrap();
    let b = deterministic_series(&cfg, 12_345).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn stochastic_series_independent_of_thread_count() {
    let cfg = config(1.0, 0.0, 2000, 20);
    let run = |t: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
        pool.install(|| (stochastic_series(&cfg, 10_000).unwrap(), epsilon_n(&cfg, 10_000).unwrap()))
    };
    let (s1, e1) = run(1);
    let (s5, e5) = run(5);
    assert_eq!(s1.mean.to_bits(), s5.mean.to_bits());
    assert_eq!(e1.mean.to_bits(), e5.mean.to_bits());
}

#[test]
fn zero_noise_has_no_stochastic_term() {
    for &(n, g, f) in &[(10u64, 1.0, 0.3), (1_000_000, 1e5, -2e-3), (1, 1e-2, 0.0)] {
        assert_eq!(stochastic_term(n, g, f, f).unwrap(), 0.0);
    }
}

#[test]
fn stochastic_series_decays_at_least_at_rate() {
    let cfg = config(1.0, 0.0, 4000, 50);
    let pts: Vec<(f64, f64)> =
        cfg.n_grid.iter().map(|&n| (n as f64, stochastic_series(&cfg, n).unwrap().mean)).collect();
    let fit = rate_fit(&pts, 2.0 * cfg.rate_exponent()).unwrap();
    // slope tolerance 0.05 for finite-n log bias
    assert!(fit.slope <= fit.theoretical_exponent + 0.05, "{fit:?}");
}

#[test]
fn tail_bound_shrinks_with_l_max() {
    for &(beta, s) in &[(1.0, 0.0), (2.0, 0.5), (2.0, 1.0)] {
        let a = config(beta, s, 500, 1);
        let mut b = a.clone();
        b.l_max = 1000;
        let (ta, tb) = (tail_check(&a, 1000).unwrap(), tail_check(&b, 1000).unwrap());
        let q = 2.0 * (beta - s);
        assert!(ta.tail_bound / tb.tail_bound >= 2f64.powf(q) * (1.0 - 1e-12), "beta={beta} s={s}");
    }
}

#[test]
fn rougher_norm_needs_longer_truncation() {
    let required = |s: f64| {
        let mut l_max = 8;
        while !tail_check(&config(2.0, s, l_max, 1), 10_000).unwrap().pass {
            l_max *= 2;
        }
        l_max
    };
    let ls: Vec<usize> = [0.0, 0.5, 1.0, 1.4].iter().map(|&s| required(s)).collect();
    assert!(ls.windows(2).all(|w| w[0] <= w[1]), "{ls:?}");
    assert!(ls[3] > ls[0], "{ls:?}");
}

#[test]
fn passing_tail_check_means_doubling_is_immaterial() {
    let cfg = config(1.0, 0.0, 4000, 1);
    let n = 100_000;
    let t = tail_check(&cfg, n).unwrap();
    assert!(t.pass);
    let mut wide = cfg.clone();
    wide.l_max *= 2;
    let change = deterministic_series(&wide, n).unwrap() / t.retained - 1.0;
    assert!(change >= 0.0 && change < cfg.tail_tolerance);
}

#[test]
fn spike_truth_is_local() {
    let (n, k) = (10_000, 5);
    let mut cfg = config(1.0, 0.0, 300, 2);
    cfg.truth = TruthSpec::sparse_spikes(1.0, 1, vec![(2, 0.4), (k, -0.1)]);
    let rep = series_report(&cfg, n, true).unwrap();
    for p in rep.per_l.iter().filter(|p| p.l > k) {
        let zero = MarginalPosterior::new(n, prior_gamma(p.l, 1.0, 1), 0.0).unwrap().second_moment_about(0.0);
        assert_eq!(p.deterministic_term, sobolev_weight(p.l, 0.0, 1) * zero, "l={}", p.l);
    }
}

#[test]
fn high_frequency_deterministic_terms_bounded_by_prior_moment() {
    let cfg = config(2.0, 0.5, 400, 2);
    let n = 10_000;
    let (_, l_n) = thresholds(n, cfg.beta, cfg.d, default_m_n(n));
    let rep = series_report(&cfg, n, true).unwrap();
    for p in rep.per_l.iter().filter(|p| p.l > l_n) {
        let g = prior_gamma(p.l, cfg.beta, cfg.d);
        let t0 = cfg.truth.scaled_tail_sup(p.l - 1);
        assert!(p.deterministic_term <= p.weight * (2.0 + t0 * t0) / (g * g), "l={}", p.l);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config(1.0, 0.5, 100, 1);
    assert!(matches!(epsilon_n(&cfg, 100), Err(Error::Invalid(_))));
    cfg.s = 0.0;
    cfg.n_grid = vec![100, 10, 1000, 10_000];
    assert!(cfg.validate().is_err());
}
