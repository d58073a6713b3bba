use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-spectra"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NONLOCAL_SPECTRA_JOBS")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eig_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["eig", "--config", &config("constant.json")], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&tmp.path().join("eig.json"));
    assert!((v["lambda1"].as_f64().unwrap() + 2.0).abs() < 1e-8);
    assert!(tmp.path().join("eigenfunction.csv").exists());
}

#[test]
fn sweep_d_csv_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["sweep-d", "--config", &config("sweep_d.json")], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0], "param,lambda1,lambda_star,is_principal,gap_neg_max_aT,gap_neg_spacetime_avg");
}

#[test]
fn validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["eig", "--config", &config("bad.json")], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("problem.sigma"));

    let o = run(&["frobnicate", "--config", &config("constant.json")], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    // a config written for another subcommand
    let o = run(&["sweep-d", "--config", &config("bad.json").replace("bad", "constant")], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/command/name"));
}

#[test]
fn solver_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "problem": {
            "domain": {"bounds": [[0, 1]], "cells": [250]},
            "kernel": {"family": "epanechnikov1d"},
            "coefficient": {"kind": "separable", "space": "x", "time": "sin(2*pi*t)"},
            "D": 1, "sigma": 1
        }
    }"#;
    let path = tmp.path().join("c.json");
    std::fs::write(&path, cfg).unwrap();
    // above the dense cap for periodic problems
    let o = run(&["oracle-compare", "--config", path.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!tmp.path().join("out/manifest.json").exists());
}

#[test]
fn time_dependent_test_function_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(configs().join("certify.json")).unwrap().replace("1 + 0.5*x", "1 + 0.5*t");
    let path = tmp.path().join("c.json");
    std::fs::write(&path, cfg).unwrap();
    let o = run(&["certify", "--config", path.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/command/test_function/expr"));
}

#[test]
fn manifest_hashes_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["mp-check", "--config", &config("mp_check.json")], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let m = read_json(&tmp.path().join("manifest.json"));
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["mp.json", "counterexample.csv"]);
    for f in files {
        let bytes = std::fs::read(tmp.path().join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(m["subcommand"], "mp-check");
    assert!(m["wall_clock"]["total"].as_f64().is_some());
    assert_eq!(m["config"]["problem"]["sigma"], 1.0);
}

#[test]
fn jobs_env_overrides_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nonlocal-spectra"))
        .args(["sweep-sigma", "--config", &config("sweep_sigma.json"), "--jobs", "1", "--out"])
        .arg(tmp.path())
        .env("NONLOCAL_SPECTRA_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&tmp.path().join("manifest.json"))["jobs"], 3);

    let o = Command::new(env!("CARGO_BIN_EXE_nonlocal-spectra"))
        .args(["eig", "--config", &config("constant.json"), "--out"])
        .arg(tmp.path())
        .env("NONLOCAL_SPECTRA_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_example_config_runs() {
    for (cmd, file) in [
        ("sweep-sigma", "sweep_sigma.json"),
        ("poincare", "poincare.json"),
        ("certify", "certify.json"),
        ("oracle-compare", "oracle.json"),
    ] {
        let tmp = tempfile::tempdir().unwrap();
        let o = run(&[cmd, "--config", &config(file)], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
