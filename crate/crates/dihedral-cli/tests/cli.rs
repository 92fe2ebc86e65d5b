use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn d4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d4")).args(args).env("D4_THREADS", "2").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let o = d4(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("d4-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn cc_counts_and_is_deterministic() {
    let v = ok_json(&["cc", "--alpha", "1"]);
    assert_eq!(v["count"], 20);
    assert_eq!(v["rectangular"], 12);
    assert_eq!(v["restpoints"].as_array().unwrap().len(), 40);
    let (a, b) = (d4(&["cc", "--alpha", "0.7"]), d4(&["cc", "--alpha", "0.7"]));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(d4(&["cc", "--alpha", "2.5"]).status.code(), Some(64));
    assert_eq!(d4(&["cc"]).status.code(), Some(64));
    assert_eq!(d4(&["trace", "--alpha", "1", "--section", "planar", "--from", "p11", "--side", "right"]).status.code(), Some(64));
    assert_eq!(d4(&["alpha-star", "--bracket", "1.7,1.2"]).status.code(), Some(64));
    // no sign change of the first-arm velocity across the default tetra brackets
    assert_eq!(d4(&["alpha-star", "--section", "tetra"]).status.code(), Some(2));
    assert_eq!(d4(&["--help"]).status.code(), Some(0));
}

#[test]
fn trace_outputs() {
    let v = ok_json(&["trace", "--alpha", "1", "--section", "planar", "--from", "p11-", "--side", "right", "--format", "json"]);
    let arm_v = v["arm_v"].as_array().unwrap();
    assert_eq!(arm_v.len(), 4);
    assert!((arm_v[0].as_f64().unwrap() - -1.2649188).abs() < 1e-6);
    assert!(v["outcome"].to_string().contains("ArmEscape"));

    let csv = scratch("trace.csv");
    let v = ok_json(&["trace", "--alpha", "1", "--section", "tetra", "--from", "e11-", "--side", "right", "--arms", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(v["arm_v"].as_array().unwrap().len(), 1);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().count() > 10);

    let svg = scratch("plot.svg");
    let o = d4(&["plot", csv.to_str().unwrap(), "-o", svg.to_str().unwrap(), "--section", "tetra"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = std::fs::read_to_string(&svg).unwrap();
    assert!(s.starts_with("<svg") || s.starts_with("<?xml"));
    for class in ["trajectory", "arm", "restpoint"] {
        assert!(s.contains(&format!("class=\"{class}\"")), "{class}");
    }

    let o = d4(&["trace", "--alpha", "0.5", "--section", "planar", "--from", "p11-", "--side", "right", "--format", "svg"]);
    assert!(o.status.success() && String::from_utf8_lossy(&o.stdout).contains("class=\"trajectory\""));
    // the full system has no one-dimensional section to trace on
    assert_ne!(d4(&["trace", "--alpha", "1", "--section", "full", "--from", "p11-", "--side", "right"]).status.code(), Some(0));
}

#[test]
fn kepler_check() {
    let v = ok_json(&["kepler-check", "--beta", "0.5"]);
    assert!(v["error"].as_f64().unwrap() < 1e-6);
    assert!((v["exact"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(d4(&["kepler-check", "--beta", "1"]).status.code(), Some(64));
}

#[test]
fn verify_appendix_formats() {
    let v = ok_json(&["verify-appendix", "--format", "json"]);
    assert_eq!(v.as_array().unwrap().len(), 48);
    let o = d4(&["verify-appendix", "--set", "tetra-newton", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("name,step,direction"));
    let o = d4(&["verify-appendix"]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("| name |"));
    assert_eq!(d4(&["verify-appendix", "--set", "nope"]).status.code(), Some(64));
}

#[test]
fn connections_json() {
    let v = ok_json(&["connections", "--alpha", "1"]);
    assert!(v["graph"]["edges"].as_array().unwrap().len() > 10);
    assert_eq!(v["graph"]["nodes"].as_array().unwrap().len(), 22);
}
