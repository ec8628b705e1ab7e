mod common;

use std::fs;
use std::path::Path;

use common::*;
use serde_json::Value;

const SMALL: &str = r#"
[model]
beta = 1.0
d = 1
s = 0.0

[truth]
kind = "poly_decay"
amplitude = 1.0

[experiment]
n_grid = [1e2, 1e3, 1e4, 1e5]
replicates = 24
l_max = 2000
seed = 11
"#;

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

/// Manifest is schema-valid, lists every file with its current hash and
/// shares its run id with the JSON outputs.
fn check_manifest(out: &Path, command: &str, expected: &[&str]) -> Value {
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(schema_errors(&schema("manifest"), &m), Vec::<String>::new());
    assert_eq!(m["command"], command);
    let outputs = m["outputs"].as_array().unwrap();
    let paths: Vec<&str> = outputs.iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(paths, expected);
    for o in outputs {
        let bytes = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        if o["path"].as_str().unwrap().ends_with(".json") {
            assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["run_id"], m["run_id"]);
        }
    }
    m
}

#[test]
fn verify_default_config_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--config", default_config().to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = read_json(&tmp.path().join("verify_report.json"));
    assert_eq!(schema_errors(&schema("verify_report"), &r), Vec::<String>::new());
    assert_eq!(r["all_pass"], true);
    assert!(r["checks"].as_array().unwrap().len() >= 8);
    let m = check_manifest(tmp.path(), "verify", &["verify_report.json"]);
    let cfg_bytes = fs::read(default_config()).unwrap();
    assert_eq!(m["config_sha256"].as_str().unwrap(), sha256_hex(&cfg_bytes));
}

#[test]
fn verify_detects_perturbed_normalizer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &format!("{SMALL}\n[verify]\nnormalizer_perturbation = 1e-6\n"));
    let out = tmp.path().join("o");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = read_json(&out.join("verify_report.json"));
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["normalizer_identity"]);
}

#[test]
fn missing_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["rates", "--config", tmp.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn smoothness_beyond_range_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &SMALL.replace("s = 0.0", "s = 0.5"));
    let o = run(&["rates", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!tmp.path().join("rates.csv").exists());
}

#[test]
fn malformed_input_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[model\nbeta = ");
    assert_eq!(code(&run(&["lipscan", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["rates", "--config", cfg.to_str().unwrap(), "--bogus"])), 2);
    assert_eq!(code(&run(&["teleport", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn coarse_truncation_exits_3_with_suggestion() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &SMALL.replace("l_max = 2000", "l_max = 20"));
    let o = run(&["rates", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("try l_max >="));
    let o = run(&["decompose", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn rates_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let mut csvs = Vec::new();
    for t in ["1", "4", "16"] {
        let out = tmp.path().join(format!("t{t}"));
        let o = run(&["rates", "--config", cfg.to_str().unwrap(), "--threads", t, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(fs::read(out.join("rates.csv")).unwrap());
        check_manifest(&out, "rates", &["rates.csv", "ratefit.json"]);
    }
    // the environment variable is the fallback for --threads
    let out = tmp.path().join("env");
    let o = std::process::Command::new(bin())
        .args(["rates", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("BESOV_CONTRACT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    csvs.push(fs::read(out.join("rates.csv")).unwrap());
    assert!(csvs.windows(2).all(|w| w[0] == w[1]));

    let text = String::from_utf8(csvs[0].clone()).unwrap();
    assert!(text.starts_with("n,epsilon,stderr\n"));
    assert_eq!(text.lines().count(), 5);
    let fit = read_json(&tmp.path().join("t1/ratefit.json"));
    assert_eq!(schema_errors(&schema("ratefit"), &fit), Vec::<String>::new());
    assert!((fit["theoretical_exponent"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-15);
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope"));
}

#[test]
fn seed_override_changes_noise_but_not_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&["rates", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()])), 0);
    let o = run(&["rates", "--config", cfg.to_str().unwrap(), "--seed", "99", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(a.join("rates.csv")).unwrap(), fs::read(b.join("rates.csv")).unwrap());
    let (ma, mb) = (read_json(&a.join("manifest.json")), read_json(&b.join("manifest.json")));
    assert_eq!(ma["seed"], 11);
    assert_eq!(mb["seed"], 99);
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_ne!(ma["run_id"], mb["run_id"]);
}

fn csv_rows(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn decompose_series_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let a = tmp.path().join("a");
    let o = run(&["decompose", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    check_manifest(&a, "decompose", &["series.csv", "series_per_l.csv"]);

    let (header, rows) = csv_rows(&a.join("series.csv"));
    assert_eq!(
        header.join(","),
        "n,j_n,l_n,stochastic,stochastic_stderr,stochastic_tail_bound,l_stoch,deterministic,\
         deterministic_tail_bound,epsilon,epsilon_stderr,epsilon_sq,rhs,inequality"
    );
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[13] == "pass"));

    // the per-l breakdown covers the smallest n and sums to the totals
    let (h, per_l) = csv_rows(&a.join("series_per_l.csv"));
    assert_eq!(h.join(","), "n,l,weight,stochastic_term,deterministic_term");
    assert_eq!(per_l.len(), 2000);
    assert!(per_l.iter().all(|r| r[0] == "100"));
    let f = |s: &str| s.parse::<f64>().unwrap();
    let det: f64 = per_l.iter().map(|r| f(&r[4])).sum();
    let sto: f64 = per_l.iter().filter(|r| !r[3].is_empty()).map(|r| f(&r[3])).sum();
    assert!((det / f(&rows[0][7]) - 1.0).abs() < 1e-12);
    assert!((sto / f(&rows[0][3]) - 1.0).abs() < 1e-12);
    let l_stoch: usize = rows[0][6].parse().unwrap();
    assert_eq!(per_l.iter().filter(|r| !r[3].is_empty()).count(), l_stoch);

    // the deterministic column does not depend on the noise
    let b = tmp.path().join("b");
    let o = run(&["decompose", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let (_, rows_b) = csv_rows(&b.join("series.csv"));
    for (x, y) in rows.iter().zip(&rows_b) {
        assert_eq!(x[7], y[7]);
        assert_eq!(x[8], y[8]);
    }
}

#[test]
fn lipscan_default_grid_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let o = run(&["lipscan", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    check_manifest(tmp.path(), "lipscan", &["lipscan.csv"]);
    let (header, rows) = csv_rows(&tmp.path().join("lipscan.csv"));
    assert_eq!(header.join(","), "n,l,regime,ratio,bound,pass");
    assert!(rows.iter().any(|r| r[2] == "low") && rows.iter().any(|r| r[2] == "high"));
    assert!(rows.iter().all(|r| r[5] == "true"));
}

/// Far from the soft-threshold zone the posterior is a shifted Gaussian, so
/// the ratio approaches 1 and exceeds the high-frequency bound 8n/gamma^2
/// once gamma^2 > 8n.
#[test]
fn lipscan_far_pairs_exceed_high_frequency_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[lipscan]\nn = [1000]\nl = [14, 52]\npairs = [[16.0, 17.0]]\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = run(&["lipscan", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let (_, rows) = csv_rows(&tmp.path().join("lipscan.csv"));
    // l = 14: gamma^2 = 2744 < 8n, bound above 1, still passes
    assert_eq!(rows[0][5], "true");
    assert_eq!(rows[1][2], "high");
    assert_eq!(rows[1][5], "false");
    assert!((rows[1][3].parse::<f64>().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn scientific_notation_counts_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("replicates = 24", "replicates = 2.4e1").replace("l_max = 2000", "l_max = \"2e3\"");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("o");
    assert_eq!(code(&run(&["rates", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let plain = write_config(tmp.path(), "p.toml", SMALL);
    let out2 = tmp.path().join("p");
    assert_eq!(code(&run(&["rates", "--config", plain.to_str().unwrap(), "--out", out2.to_str().unwrap()])), 0);
    assert_eq!(fs::read(out.join("rates.csv")).unwrap(), fs::read(out2.join("rates.csv")).unwrap());
}
