//! End-to-end runs of the `bclab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bclab::experiment::ExperimentConfig;
use serde_json::Value;
use tempfile::TempDir;

fn bclab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bclab")).args(args).arg("--out-dir").arg(dir).output().unwrap()
}

fn with_config(text: &str, sub: &str) -> (TempDir, Output) {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    let o = bclab(&[sub, "--config", cfg.to_str().unwrap()], &out);
    (tmp, o)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = "nodes = 129\nn_modes = 24\nT = 0.5\nsteps = 256\nsamples = 10\n";

#[test]
fn config_errors_exit_with_two_and_write_nothing() {
    for bad in ["nodes = many\n", "colour = blue\n", "eps = 0.1\ndelta = 0.05\n", "T = 1\nT = 2\n"] {
        let (tmp, o) = with_config(bad, "eigen");
        assert_eq!(o.status.code(), Some(2), "{bad:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!tmp.path().join("out").exists(), "{bad:?}");
    }
}

#[test]
fn verify_reports_honestly_on_the_defaults() {
    let tmp = TempDir::new().unwrap();
    let o = bclab(&["verify"], tmp.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&tmp.path().join("report.json"));
    assert_eq!(report["pass"], false);
    assert_eq!(report["adjointness.max_discrepancy.pass"], true);
    assert_eq!(report["mollified_duality.max_discrepancy.pass"], true);
    // only the tail-decay items fail at this resolution
    let failing: Vec<_> = stdout.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert!(!failing.is_empty() && failing.iter().all(|l| l.contains("tail_decay")), "{stdout}");
}

#[test]
fn broken_quadrature_is_caught() {
    let (tmp, o) = with_config(&format!("{SMALL}break_quadrature = true\n"), "verify");
    assert_eq!(o.status.code(), Some(1));
    let report = json(&tmp.path().join("out/report.json"));
    assert_eq!(report["adjointness.max_discrepancy.pass"], false);
    assert!(report["adjointness.max_discrepancy"].as_f64().unwrap() > 1e-12);
}

#[test]
fn config_echo_reparses_and_manifest_lists_it() {
    let (tmp, o) = with_config(SMALL, "eigen");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let echoed = fs::read_to_string(out.join("config.txt")).unwrap();
    let again = ExperimentConfig::parse(&echoed, Some(&out)).unwrap();
    assert_eq!(again.to_text(), echoed);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config.n_modes"], "24");
    assert!(out.join("lambdas.csv").exists() && out.join("timings.txt").exists());
}

#[test]
fn eikonal_on_the_unit_square() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/unit_square.cfg");
    let tmp = TempDir::new().unwrap();
    let o = bclab(&["eikonal", "--config", cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let tau = json(&tmp.path().join("summary.json"))["tau_centre"].as_f64().unwrap();
    assert!((tau - 0.5).abs() <= 2.0 / 128.0, "{tau}");
}

#[test]
fn hidden_target_stays_unreached() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/centre_bump_short.cfg");
    let tmp = TempDir::new().unwrap();
    let o = bclab(&["control", "--config", cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rel = json(&tmp.path().join("summary.json"))["relative_residual"].as_f64().unwrap();
    assert!(rel >= 0.99, "{rel}");
}
