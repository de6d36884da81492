//! End-to-end runs of the `nonlocal-heat` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-heat"))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Writes a config (small 1D defaults patched by `patch`) into `dir`.
fn write_config(dir: &Path, patch: Value) -> PathBuf {
    let mut cfg = json!({
        "mode": "solve",
        "domain": {"dim": 1, "lengths": [1.0], "n": [49]},
        "time": {"T": 0.1, "steps": 100},
        "potential": {"name": "zero"},
        "initial": {"name": "sine_mode", "k": 1, "amplitude": 1.0},
        "output": {"dir": "out", "formats": ["csv", "json", "bin"]}
    });
    merge(&mut cfg, patch);
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn run(config: &Path, extra: &[&str]) -> Output {
    bin().arg(config).args(extra).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, column: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == column)
        .unwrap();
    r.records()
        .map(|rec| rec.unwrap()[idx].to_string())
        .collect()
}

#[test]
fn zero_datum_writes_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"initial": {"name": "constant", "c": 0.0}}),
    );
    let out = run(&cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let values = csv_column(&dir.path().join("out/u_t.csv"), "value");
    assert_eq!(values.len(), 49);
    assert!(values.iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    assert!(dir.path().join("out/config.json").exists());
}

#[test]
fn heat_limit_matches_closed_form_peak() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"domain": {"n": [199]}, "time": {"steps": 1000}}),
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("converged=true"), "{stdout}");
    assert_eq!(stdout.lines().count(), 1);

    let field = read_json(&dir.path().join("out/u_t.json"));
    let max = field["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let exact = (1.0 - (-PI * PI * 0.1).exp()) / (PI * PI);
    assert!((max - exact).abs() / exact < 2e-3, "{max} vs {exact}");

    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["fixed_point"]["converged"], true);
    assert_eq!(report["fixed_point"]["threshold"]["product"], 0.0);
    assert!(report["verification"]["decay"]["norms"].is_array());
    assert!(report["verification"]["energy"]["lhs"].is_number());
    assert!(report["verification"]["elliptic"]["residual"].is_number());
}

#[test]
fn steps_one_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"time": {"steps": 1}}));
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time.steps"));
}

#[test]
fn config_and_io_failures_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&dir.path().join("missing.json"), &[]).status.code(),
        Some(4)
    );

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&bad, &[]).status.code(), Some(3));

    let cfg = write_config(dir.path(), json!({}));
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = run(&cfg, &["--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let out = run(&cfg, &["--mode", "plot"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_two_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"potential": {"name": "quadratic"}, "fixedpoint": {"max_iter": 1}}),
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["fixed_point"]["converged"], false);
    assert_eq!(report["fixed_point"]["iterations"], 1);
    assert!(dir.path().join("out/u_t.csv").exists());
}

#[test]
fn binary_trajectory_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"time": {"steps": 10, "store_every": 5}}));
    assert_eq!(run(&cfg, &["--quiet"]).status.code(), Some(0));
    let bytes = fs::read(dir.path().join("out/trajectory.bin")).unwrap();
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    assert_eq!((word(0), word(1), word(2)), (1, 3, 49));
    assert_eq!(bytes.len(), 8 * 3 + 8 * 3 * 49);
    // stored states are t = 0, T/2, T; the first is the datum
    let first = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    assert!((first - (PI / 50.0).sin()).abs() < 1e-15);
}

#[test]
fn quiet_suppresses_summary_and_out_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({}));
    let alt = dir.path().join("elsewhere");
    let out = run(&cfg, &["--quiet", "--out", alt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(alt.join("report.json").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn probe_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "mode": "probe",
            "potential": {"name": "quadratic"},
            "initial": {"amplitude": 0.5},
            "fixedpoint": {"starts": 4, "seed": 11}
        }),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "0"), (&b, "4")] {
        let status = bin()
            .arg(&cfg)
            .args(["--out", out.to_str().unwrap(), "--seed", "7"])
            .env("NONLOCAL_HEAT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(0));
    }
    let pa = fs::read(a.join("probe.json")).unwrap();
    assert_eq!(pa, fs::read(b.join("probe.json")).unwrap());
    let probe = read_json(&a.join("probe.json"));
    assert_eq!(probe["probe"]["seed"], 7);
    assert_eq!(probe["probe"]["starts"].as_array().unwrap().len(), 4);
    assert!(probe["probe"]["max_pairwise_relative"].as_f64().unwrap() <= 1e-8);
    // the echo records the effective seed
    assert_eq!(read_json(&a.join("config.json"))["fixedpoint"]["seed"], 7);
}

#[test]
fn solve_reports_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"potential": {"name": "absval"}}));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert_eq!(
            run(&cfg, &["--quiet", "--out", out.to_str().unwrap()])
                .status
                .code(),
            Some(0)
        );
    }
    for file in ["report.json", "u_t.json", "trajectory.bin"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn amplitude_sweep_products_increase() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "mode": "sweep",
            "potential": {"name": "quadratic"},
            "sweep": {"axis": "amplitude", "values": [1.0, 0.1, 0.5]}
        }),
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("out/sweep.csv");
    let values: Vec<f64> = csv_column(&path, "value")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(values, vec![0.1, 0.5, 1.0]);
    let products: Vec<f64> = csv_column(&path, "threshold_product")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    for (a, p) in values.iter().zip(&products) {
        let expected = (0.1 * a) * (0.2 * a) / (PI * PI);
        assert!(
            (p - expected).abs() <= 1e-12 * expected,
            "{p} vs {expected}"
        );
    }
    assert!(products.windows(2).all(|w| w[0] < w[1]));
    assert!(csv_column(&path, "converged").iter().all(|c| c == "true"));
    assert_eq!(
        fs::read_dir(dir.path().join("out/rows")).unwrap().count(),
        3
    );
}

#[test]
fn constant_potential_sweep_over_t() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "mode": "sweep",
            "potential": {"name": "constant", "params": [2.0]},
            "sweep": {"axis": "T", "values": [0.5, 0.05, 0.2]}
        }),
    );
    assert_eq!(run(&cfg, &[]).status.code(), Some(0));
    let path = dir.path().join("out/sweep.csv");
    assert!(csv_column(&path, "converged").iter().all(|c| c == "true"));
    assert!(csv_column(&path, "threshold_product")
        .iter()
        .all(|p| p.parse::<f64>().unwrap() == 0.0));
    assert!(csv_column(&path, "iterations").iter().all(|i| i == "2"));
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"mode": "sweep", "sweep": {"axis": "T", "values": []}}),
    );
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.values"));
}

#[test]
fn zero_datum_study_reports_na() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"mode": "convergence_study", "initial": {"name": "constant", "c": 0.0}, "study": {"levels": 3}}),
    );
    assert_eq!(run(&cfg, &[]).status.code(), Some(0));
    let path = dir.path().join("out/convergence.csv");
    let header = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        header,
        "level,h,dt,uT_error_vs_finest,elliptic_residual,energy_mismatch,observed_order"
    );
    assert!(csv_column(&path, "uT_error_vs_finest")
        .iter()
        .all(|e| e == "0"));
    assert!(csv_column(&path, "observed_order")
        .iter()
        .all(|o| o == "n/a"));
}

#[test]
fn crank_nicolson_time_study_is_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "mode": "convergence_study",
            "time": {"steps": 20, "scheme": "crank_nicolson"},
            "study": {"levels": 3, "refine": "time"}
        }),
    );
    assert_eq!(run(&cfg, &[]).status.code(), Some(0));
    let orders = csv_column(&dir.path().join("out/convergence.csv"), "observed_order");
    let last: f64 = orders.last().unwrap().parse().unwrap();
    assert!((1.8..=2.2).contains(&last), "{orders:?}");
    let dts: Vec<f64> = csv_column(&dir.path().join("out/convergence.csv"), "dt")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((dts[0] / dts[2] - 4.0).abs() < 1e-12);
}

#[test]
fn from_file_datum_round_trips_through_a_solve() {
    let dir = tempfile::tempdir().unwrap();
    let first = write_config(dir.path(), json!({}));
    assert_eq!(run(&first, &["--quiet"]).status.code(), Some(0));
    fs::copy(dir.path().join("out/u_t.csv"), dir.path().join("datum.csv")).unwrap();

    let cfg = write_config(
        dir.path(),
        json!({"initial": {"name": "from_file", "path": "datum.csv", "sign_check": true}, "output": {"dir": "second"}}),
    );
    let out = run(&cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("second/u_t.csv").exists());

    let study = write_config(
        dir.path(),
        json!({"mode": "convergence_study", "initial": {"name": "from_file", "path": "datum.csv"}}),
    );
    assert_eq!(run(&study, &[]).status.code(), Some(3));
}

#[test]
fn two_dimensional_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "domain": {"dim": 2, "lengths": [1.0, 1.0], "n": [15, 15]},
            "time": {"steps": 20},
            "potential": {"name": "quadratic"},
            "initial": {"name": "gaussian", "center": [0.5, 0.5], "width": 0.2, "amp": 1.0}
        }),
    );
    let out = run(&cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let header = fs::read_to_string(dir.path().join("out/u_t.csv")).unwrap();
    assert!(header.starts_with("x,y,value"));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["verification"]["decay"]["positivity_passed"], true);
}
