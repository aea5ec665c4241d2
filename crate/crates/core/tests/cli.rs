//! Runs the `conleg` binary end to end.

use std::path::PathBuf;
use std::process::{Command, Output};

use conleg::reference::{bs_greeks, bs_price, BsKind};

fn model_file(name: &str, json: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conleg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn gbm1() -> PathBuf {
    model_file("gbm1.json", r#"{"model": "gbm", "sigma": 0.15, "r": 0.03, "q": 0.01}"#)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conleg")).args(args).output().unwrap()
}

fn rows(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, body)
}

#[test]
fn gbm_put_rows_match_black_scholes() {
    let m = gbm1();
    let out = run(&["price", "--model-file", m.to_str().unwrap(), "--S", "100", "--strike-range", "80:120:5", "--T", "1"]);
    assert!(out.status.success());
    let (header, body) = rows(&out);
    assert_eq!(header, ["strike", "spot", "price"]);
    assert_eq!(body.len(), 5);
    for r in body {
        let e = bs_price(100.0, r[0], 0.03, 0.01, 0.15, 1.0, BsKind::Put);
        assert!((r[2] - e).abs() < 1e-10, "K={}: {} vs {e}", r[0], r[2]);
    }
}

#[test]
fn oracle_columns_and_stable_output() {
    let m = gbm1();
    let args = [
        "price", "--model-file", m.to_str().unwrap(), "--payoff", "call", "--S", "100", "--strike-range", "90:110:3",
        "--T", "0.5", "--oracle",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (header, body) = rows(&a);
    assert_eq!(header, ["strike", "spot", "price", "oracle", "abs_err"]);
    for r in body {
        assert!(r[4] < 1e-10);
    }
}

#[test]
fn invalid_vg_is_a_parameter_error() {
    let m = model_file("bad_vg.json", r#"{"model": "vg", "sigma": 0.5, "theta": 2.0, "nu": 1.0, "r": 0.1, "q": 0.0}"#);
    let out = run(&["price", "--model-file", m.to_str().unwrap(), "--S", "100", "--K", "100", "--T", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn bad_tolerance_and_missing_flags_exit_two() {
    let m = gbm1();
    let out = Command::new(env!("CARGO_BIN_EXE_conleg"))
        .args(["price", "--model-file", m.to_str().unwrap(), "--S", "100", "--K", "100", "--T", "1"])
        .env("CONLEG_TOL", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["price", "--model-file", m.to_str().unwrap(), "--style", "barrier", "--S", "100", "--K", "100", "--T", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn american_gives_one_row_per_spot() {
    let m = model_file("cgmy1.json", r#"{"model": "cgmy", "C": 1, "G": 5, "M": 5, "Y": 0.5, "r": 0.1, "q": 0}"#);
    let out = run(&[
        "price", "--model-file", m.to_str().unwrap(), "--style", "american", "--dates", "2", "--K", "1",
        "--spot-range", "0.8:1.2:4", "--T", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, body) = rows(&out);
    assert_eq!(body.len(), 4);
    for r in body {
        assert!(r[2] >= (1.0 - r[1]).max(0.0) - 1e-12);
    }
}

#[test]
fn greeks_columns_match_closed_form() {
    let m = gbm1();
    let out = run(&["greeks", "--model-file", m.to_str().unwrap(), "--S", "100", "--strike-range", "80:120:5", "--T", "1"]);
    assert!(out.status.success());
    let (header, body) = rows(&out);
    assert_eq!(header, ["strike", "spot", "price", "delta", "gamma"]);
    for r in body {
        let e = bs_greeks(100.0, r[0], 0.03, 0.01, 0.15, 1.0, BsKind::Put);
        assert!((r[3] - e.delta).abs() < 1e-10 && (r[4] - e.gamma).abs() < 1e-10);
    }
}

#[test]
fn greeks_json_mirrors_columns() {
    let m = gbm1();
    let out = run(&[
        "greeks", "--model-file", m.to_str().unwrap(), "--payoff", "call", "--S", "100", "--strike-range", "90:110:3",
        "--T", "1", "--output", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["strike", "spot", "price", "delta", "gamma"]);
    let d = v["delta"].as_array().unwrap();
    let e = bs_greeks(100.0, 100.0, 0.03, 0.01, 0.15, 1.0, BsKind::Call).delta;
    assert!((d[1].as_f64().unwrap() - e).abs() < 1e-10);
}

#[test]
fn greeks_reject_other_styles() {
    let m = gbm1();
    let out = run(&[
        "greeks", "--model-file", m.to_str().unwrap(), "--style", "bermudan", "--dates", "4", "--S", "100", "--K", "100",
        "--T", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_data_lists_curve_samples() {
    let m = gbm1();
    let out = run(&["greeks", "--model-file", m.to_str().unwrap(), "--S", "100", "--K", "100", "--T", "1", "--plot-data"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("curve,x,y"));
    for name in ["price", "delta", "gamma"] {
        assert_eq!(text.lines().filter(|l| l.starts_with(&format!("{name},"))).count(), 201);
    }
}
