use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hyheat(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyheat"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = match fs::read_dir(out) {
        Ok(rd) => rd.map(|e| e.unwrap().path()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

fn only_report(out: &Path) -> Value {
    let dirs = run_dirs(out);
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    serde_json::from_str(&fs::read_to_string(dirs[0].join("report.json")).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn analyze_three_state_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hyheat(tmp.path(), &["analyze", "--preset", "example-3.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = only_report(tmp.path());
    let pi: Vec<f64> = r["analysis"]["stationary"].as_array().unwrap().iter().map(f).collect();
    for (a, b) in pi.iter().zip([7.0 / 15.0, 0.2, 1.0 / 3.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((f(&r["analysis"]["heat_exponent"]) + 44.0 / 75.0).abs() < 1e-12);
    assert!(r["config"]["note"].as_str().unwrap().contains("-8/15"));
    assert_eq!(r["config"]["generator"]["rates"][1][0], 3.0);
}

#[test]
fn analyze_two_state_example_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hyheat(tmp.path(), &["analyze", "--preset", "example-4.2"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("almost surely stable"), "{stdout}");
    assert!(stdout.contains("moment unstable"), "{stdout}");
    let r = only_report(tmp.path());
    assert_eq!(r["analysis"]["sample_verdict"]["verdict"], "stable");
    let m = &r["analysis"]["moments"][0];
    assert_eq!(m["verdict"]["verdict"], "unstable");
    assert!((f(&m["exponent"]) - (-1.0 + 8f64.sqrt())).abs() < 1e-10);
}

#[test]
fn analyze_single_state_noiseless() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(hyheat(tmp.path(), &["analyze", "--preset", "single-state-noiseless"]).status.success());
    let r = only_report(tmp.path());
    assert!((f(&r["analysis"]["sample_exponent"]) + 0.9).abs() < 1e-14);
}

#[test]
fn analyze_with_every_backend() {
    for backend in ["power-iteration", "dense-eigen", "variational"] {
        let tmp = tempfile::tempdir().unwrap();
        let o = hyheat(tmp.path(), &["analyze", "--preset", "example-4.2", "--lambda-backend", backend]);
        assert!(o.status.success());
        let r = only_report(tmp.path());
        assert_eq!(r["analysis"]["growth_backend"], backend);
        assert!((f(&r["analysis"]["moments"][0]["growth_rate"]) - (1.0 + 8f64.sqrt())).abs() < 1e-8);
    }
    let tmp = tempfile::tempdir().unwrap();
    let o = hyheat(tmp.path(), &["analyze", "--preset", "example-4.2", "--lambda-backend", "qr"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("power-iteration"));
}

#[test]
fn simulate_unstable_scalar_default() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hyheat(tmp.path(), &["simulate", "--preset", "eq-16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = only_report(tmp.path());
    let s = &r["sample"];
    assert!((f(&s["estimate"]) - 0.5).abs() <= 3.0 * f(&s["standard_error"]));
    let dir = &run_dirs(tmp.path())[0];
    for name in ["path.csv", "norm_series.csv", "log_moment_p2.csv"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let header = fs::read_to_string(dir.join("log_moment_p2.csv")).unwrap();
    assert!(header.starts_with("t,log_moment,se\n"));
}

#[test]
fn zero_paths_is_a_usage_error_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let o = hyheat(&out, &["simulate", "--preset", "eq-16", "--paths", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn same_seed_gives_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["simulate", "--preset", "example-4.2", "--paths", "500", "--seed", "3"];
    assert!(hyheat(tmp.path(), &args).status.success());
    assert!(hyheat(tmp.path(), &args).status.success());
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 2);
    for name in ["path.csv", "norm_series.csv", "log_moment_p2.csv"] {
        assert_eq!(fs::read(dirs[0].join(name)).unwrap(), fs::read(dirs[1].join(name)).unwrap(), "{name}");
    }
    let other = ["simulate", "--preset", "example-4.2", "--paths", "500", "--seed", "4"];
    assert!(hyheat(tmp.path(), &other).status.success());
    let dirs = run_dirs(tmp.path());
    assert_ne!(fs::read(dirs[0].join("path.csv")).unwrap(), fs::read(dirs[2].join("path.csv")).unwrap());
}

#[test]
fn strict_mode_escalates_heavy_tails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hyheat(tmp.path(), &["simulate", "--preset", "example-4.2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("heavy-tailed"));
    let o = hyheat(tmp.path(), &["simulate", "--preset", "example-4.2", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
    let o = hyheat(tmp.path(), &["simulate", "--preset", "eq-16", "--strict"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_random_trials() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hyheat(tmp.path(), &["verify", "--random-trials", "200", "--seed", "11"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = &run_dirs(tmp.path())[0];
    let mut reader = csv::Reader::from_path(dir.join("duality.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["trial", "lambda_direct", "lambda_eigen", "gap"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() <= 1e-6));
}

#[test]
fn verify_configured_models() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(hyheat(tmp.path(), &["verify", "--preset", "example-4.2"]).status.success());
    let r = only_report(tmp.path());
    assert_eq!(r["trials"], 1);
    let dir = &run_dirs(tmp.path())[0];
    let text = fs::read_to_string(dir.join("duality.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[1] - (1.0 + 8f64.sqrt())).abs() < 1e-8);
    assert!((row[2] - (1.0 + 8f64.sqrt())).abs() < 1e-10);

    let tmp = tempfile::tempdir().unwrap();
    assert!(hyheat(tmp.path(), &["verify", "--preset", "single-state-noiseless"]).status.success());
    assert_eq!(only_report(tmp.path())["max_gap"], 0.0);
}

#[test]
fn config_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("model.toml");
    fs::write(&cfg, "[generator]\nrates = [[-1.0, 1.0], [2.0, -2.0]]\n\n[dynamics]\nalpha = [1.0, 2.0]\nbeta = [[1.0], [0.5, 0.2]]\n").unwrap();
    let out = tmp.path().join("runs");
    let o = hyheat(&out, &["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.toml:6:8: dynamics.beta"), "{err}");
    assert!(!out.exists());
    let o = hyheat(&out, &["analyze", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eigenpair_file_domain() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("eig.csv"), "n,lambda_n,u0_n\n1,2.0,0.0\n2,5.0,1.0\n3,10.0,0.5\n").unwrap();
    let cfg = tmp.path().join("model.toml");
    fs::write(
        &cfg,
        "[generator]\nrates = [[0.0]]\n[dynamics]\nalpha = [1.0]\n[spectral]\neigenpairs = \"eig.csv\"\n",
    )
    .unwrap();
    let out = tmp.path().join("runs");
    let o = hyheat(&out, &["analyze", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = only_report(&out);
    assert_eq!(r["analysis"]["leading_index"], 2);
    assert!((f(&r["analysis"]["sample_exponent"]) + 4.0).abs() < 1e-14);
    assert!((f(&r["analysis"]["sample_exponent_upper_bound"]) + 1.0).abs() < 1e-14);
}
