use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn legkam(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legkam")).args(args).current_dir(dir).output().expect("spawn legkam")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn table_is_reproducible_and_manifested() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = legkam(&["table", "--max-m", "20", "--max-n", "40", "--out", name], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 21 * 41);
    let ma = json(&dir.path().join("a.csv.manifest.json"));
    let mb = json(&dir.path().join("b.csv.manifest.json"));
    assert_eq!(ma["input_hash"], mb["input_hash"]);
    assert_eq!(ma["subcommand"], "table");

    let out = legkam(&["table", "--max-m", "3", "--max-n", "6", "--out", "t.json"], dir.path());
    assert!(out.status.success());
    assert!(json(&dir.path().join("t.json")).is_object() || json(&dir.path().join("t.json")).is_array());
}

#[test]
fn table_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(legkam(&["table", "--max-m", "2", "--max-n", "5", "--out", "x.csv"], dir.path()).status.code(), Some(2));
    let out = legkam(&["table", "--max-m", "3", "--max-n", "5", "--out", "missing/dir/x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing/dir/x.csv"));
}

#[test]
fn certify_rows_and_grid_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = legkam(&["certify", "--n-max", "30", "--masses", "0.1,1/2,1,5,10", "--out", "c.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let min_abs: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(min_abs > 0.0);
    }
    assert_eq!(legkam(&["certify", "--n-max", "10", "--masses", "0.2,0.25", "--out", "d.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(legkam(&["certify", "--n-max", "10", "--masses", "1:11:3", "--out", "d.csv"], dir.path()).status.code(), Some(2));
    assert!(legkam(&["certify", "--n-max", "2", "--masses", "1", "--out", "e.csv"], dir.path()).status.success());
    let out = legkam(&["certify", "--n-max", "8", "--masses", "0.5:1:3", "--convention", "renumbered", "--out", "f.csv"], dir.path());
    assert!(out.status.success());
    assert!(fs::read_to_string(dir.path().join("f.csv")).unwrap().contains("renumbered"));
    // 3 λ_1 = λ_3 at m = 3/2; the coupling of that quadruple vanishes
    assert_eq!(legkam(&["certify", "--n-max", "6", "--masses", "3/2", "--out", "g.csv"], dir.path()).status.code(), Some(1));
    assert!(legkam(&["certify", "--n-max", "6", "--masses", "3/2", "--require-coupling", "--out", "h.csv"], dir.path()).status.success());
}

#[test]
fn normalform_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = legkam(&["normalform", "--dim", "16", "--mass", "5.0", "--out", "nf.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("nf.json"));
    assert_eq!(v["det_g"], "-663764/32175");
    assert_eq!(v["passed"], true);
    assert_eq!(legkam(&["normalform", "--dim", "16", "--mass", "1/4", "--out", "x.json"], dir.path()).status.code(), Some(2));
    assert!(legkam(&["normalform", "--dim", "3", "--mass", "1", "--out", "y.json"], dir.path()).status.success());
}

#[test]
fn simulate_linear_and_nonlinear() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("lin.cfg"), "dim = 3\nmass = 2\nlinear = true\nsteps = 4095\naction1 = 0.5\naction2 = 0.5\n").unwrap();
    let out = legkam(&["simulate", "lin.cfg", "--out", "lin.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("lin.json"));
    let f1 = report["frequencies"][0]["frequency"].as_f64().unwrap();
    let f2 = report["frequencies"][1]["frequency"].as_f64().unwrap();
    assert!((f1 - 2.0).abs() < 1e-6 && (f2 - 14f64.sqrt()).abs() < 1e-6);
    assert!(dir.path().join("lin.csv.manifest.json").exists());

    fs::write(dir.path().join("nl.cfg"), "dim = 4\nmass = 2\naction1 = 0.001\naction2 = 0.001\nsteps = 16383\nseed = 5\ntail_amplitude = 1e-4\n")
        .unwrap();
    let out = legkam(&["simulate", "nl.cfg", "--out", "nl.csv", "--csv-stride", "64"], dir.path());
    assert!(out.status.success());
    let report = json(&dir.path().join("nl.json"));
    assert!(report["frequencies"][0]["dominant"].as_bool().unwrap());
    assert!(report["frequencies"][1]["dominant"].as_bool().unwrap());
    assert!(report["torus_residual"].as_f64().unwrap() < 1e-2);
    let first = fs::read(dir.path().join("nl.csv")).unwrap();
    assert!(legkam(&["simulate", "nl.cfg", "--out", "nl.csv", "--csv-stride", "64"], dir.path()).status.success());
    assert_eq!(first, fs::read(dir.path().join("nl.csv")).unwrap());
}

#[test]
fn simulate_failures() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "dim six\n").unwrap();
    assert_eq!(legkam(&["simulate", "bad.cfg", "--out", "b.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(legkam(&["simulate", "absent.cfg", "--out", "b.csv"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("boom.cfg"), "dim = 3\ndt = 0.1\naction1 = 1e6\naction2 = 1e6\nsteps = 10000\n").unwrap();
    let out = legkam(&["simulate", "boom.cfg", "--out", "boom.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(dir.path().join("boom.csv")).unwrap().lines().count() >= 2);
}

#[test]
fn threads_flag_and_help() {
    let dir = tempfile::tempdir().unwrap();
    assert!(legkam(&["--threads", "2", "certify", "--n-max", "6", "--masses", "1", "--out", "c.csv"], dir.path()).status.success());
    assert_eq!(legkam(&["--threads", "0", "certify", "--n-max", "6", "--masses", "1", "--out", "c.csv"], dir.path()).status.code(), Some(2));
    let help = legkam(&["--help"], dir.path());
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["table", "certify", "normalform", "simulate", "verify-all"] {
        assert!(text.contains(sub));
    }
}
