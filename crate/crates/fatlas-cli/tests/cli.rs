//! End-to-end CLI tests: exit-code contract and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fatlas(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fatlas"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const FTORUS: &str = r#"{ "surface": { "kind": "flat_torus", "l1": 1.0, "l2": 1.0 }, "seed": 1 }"#;

const OCTA_OFF: &str = "OFF\n6 8 0\n1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n\
3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n";

const TETRA_OFF: &str = "OFF\n4 4 0\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n\
3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";

#[test]
fn triangulate_succeeds_and_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cfg.json", FTORUS);
    for out in ["a", "b"] {
        let r = fatlas(
            &["triangulate", "--config", "cfg.json", "--out", out, "--no-timestamp"],
            d,
        );
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for name in ["mesh.off", "mesh.obj", "nerve.off", "thickness.json", "thickness.csv"] {
        let a = fs::read(d.join("a").join(name)).unwrap();
        let b = fs::read(d.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
    let report = fs::read_to_string(d.join("a/thickness.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["metrics"]["euler_characteristic"], 0);
    let csv = fs::read_to_string(d.join("a/thickness.csv")).unwrap();
    assert!(csv.starts_with("bucket_lo,bucket_hi,count\n"));
}

#[test]
fn triangulate_with_oversized_eps_exits_2_with_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cfg.json", FTORUS);
    let r = fatlas(
        &["triangulate", "--config", "cfg.json", "--eps", "5.0", "--out", "o", "--no-timestamp"],
        d,
    );
    assert_eq!(r.status.code(), Some(2));
    let report = fs::read_to_string(d.join("o/thickness.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["witnesses"]["failed_stage"], "nerve");
}

#[test]
fn malformed_or_missing_config_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "bad.json", "{ not json");
    for cfg in ["bad.json", "absent.json"] {
        let r = fatlas(&["triangulate", "--config", cfg], d);
        assert_eq!(r.status.code(), Some(3));
    }
    write(d, "nosurf.json", "{}");
    let r = fatlas(&["triangulate", "--config", "nosurf.json"], d);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn qmmap_pipeline_reports_quasiregular() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cfg.json", FTORUS);
    let r = fatlas(
        &["qmmap", "--config", "cfg.json", "--out", "q", "--no-timestamp"],
        d,
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let report = fs::read_to_string(d.join("q/dilatation.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["metrics"]["quasiregular"], true);
    assert!(v["metrics"]["samples_accepted"].as_u64().unwrap() >= 10_000);
}

#[test]
fn qmmap_odd_incidence_mesh_exits_2_listing_faces() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cfg.json", "{}");
    write(d, "tetra.off", TETRA_OFF);
    let r = fatlas(
        &["qmmap", "--config", "cfg.json", "--mesh", "tetra.off", "--out", "q", "--no-timestamp"],
        d,
    );
    assert_eq!(r.status.code(), Some(2));
    let report = fs::read_to_string(d.join("q/dilatation.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(!v["witnesses"]["offending_faces"].as_array().unwrap().is_empty());
}

#[test]
fn qmmap_zero_budget_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(
        d,
        "cfg.json",
        r#"{ "surface": { "kind": "flat_torus", "l1": 1.0, "l2": 1.0 }, "samples_per_simplex": 0 }"#,
    );
    let r = fatlas(&["qmmap", "--config", "cfg.json"], d);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn bounds_prints_flat_torus_convexity_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cfg.json", FTORUS);
    let r = fatlas(&["bounds", "--config", "cfg.json", "--no-timestamp"], d);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["metrics"]["convrad_low"], 0.25);
    assert_eq!(v["metrics"]["injrad_low"], 0.5);
}

#[test]
fn verify_exit_codes_straddle_octahedron_thickness() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "octa.off", OCTA_OFF);
    write(d, "cfg.json", r#"{ "mesh": "octa.off", "phi0": 0.4 }"#);
    let r = fatlas(&["verify", "--config", "cfg.json", "--no-timestamp"], d);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    let phi = v["metrics"]["phi_min"].as_f64().unwrap();
    assert!((phi - 3.0f64.sqrt() / 4.0).abs() < 1e-12);

    let r = fatlas(
        &["verify", "--config", "cfg.json", "--phi0", "0.44", "--no-timestamp"],
        d,
    );
    assert_eq!(r.status.code(), Some(1));

    let r = fatlas(
        &["verify", "--config", "cfg.json", "--mesh", "absent.off"],
        d,
    );
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cfg.json", FTORUS);
    let a = fatlas(
        &["triangulate", "--config", "cfg.json", "--seed", "7", "--out", "s7", "--no-timestamp"],
        d,
    );
    assert_eq!(a.status.code(), Some(0));
    let report = fs::read_to_string(d.join("s7/thickness.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["inputs"]["seed"], 7);
}
