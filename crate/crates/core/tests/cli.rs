use std::fs;
use std::process::{Command, Output};

fn lf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lf"))
        .args(args)
        .output()
        .expect("lf binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_prints_one_json_line() {
    let out = lf(&["classify", "--gamma0", "-1", "--alpha", "0.1", "--gamma2", "1", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["classification"], "ExponentiallyUnstable");
    assert!((v["max_growth_rate"].as_f64().unwrap() - 0.15).abs() < 1e-12);
    assert!((v["band"]["s_plus_sq"].as_f64().unwrap() - 0.8872983346207417).abs() < 1e-12);

    let out = lf(&["classify", "--gamma0", "1", "--alpha", "-1", "--gamma2", "1", "--beta", "1", "--ordered"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["state_kind"], "Ordered");
    assert_eq!(v["classification"], "AsymptoticallyStable");
}

#[test]
fn config_errors_exit_with_three() {
    let out = lf(&["classify", "--gamma0", "0", "--alpha", "1", "--gamma2", "1", "--beta", "-1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta must be > 0"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "experiment = FreeRun\n[params]\ngamma3 = 1\n").unwrap();
    let out = lf(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = lf(&["run", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = lf(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_writes_outputs_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phase.cfg");
    fs::write(
        &path,
        "experiment = PhaseDiagram\noutput_dir = ignored\n[phase]\nn_gamma0 = 4\nn_alpha = 4\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = lf(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--override",
        "phase.n_alpha=5",
        "--threads",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("PASS classification_sign_mismatches"));
    let phase = fs::read_to_string(out_dir.join("phase.csv")).unwrap();
    assert_eq!(phase.lines().count(), 1 + 4 * 5);
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.cfg");
    fs::write(
        &path,
        "experiment = DisorderedInstability\n[params]\ngamma0 = -1\nalpha = 0.1\n\
         [grid]\nn = 16\n[solver]\ndt = 0.05\nt_end = 0.5\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lf"))
        .args(["run", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .env("LF_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL leading_rate_rel_error"));
}

#[test]
fn blow_up_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("boom.cfg");
    fs::write(
        &path,
        "experiment = FreeRun\n[params]\nlambda0 = 50\nbeta = 100\n[grid]\nn = 16\n\
         [solver]\ndt = 0.5\nt_end = 50\n[perturbation]\namplitude = 10\n",
    )
    .unwrap();
    let out = lf(&["run", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical-resolution failure"));
}

#[test]
fn dispersion_prints_a_rate_table() {
    let out = lf(&[
        "dispersion", "--gamma0", "-1", "--alpha", "0.1", "--modes", "1,2;5,5;11,0", "--n", "32", "--dt", "0.01",
        "--t-end", "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let measured: Vec<f64> = rows
        .iter()
        .map(|r| r.split_whitespace().nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(measured[0] < 0.0 && measured[1] > 0.0 && measured[2] < 0.0, "{measured:?}");
    assert!(rows.iter().all(|r| r.ends_with("PASS")));
}
