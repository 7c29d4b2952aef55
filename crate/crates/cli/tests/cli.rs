use std::path::Path;
use std::process::{Command, Output};

use limitset::{Gauge, GaugeSpec};
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limitset"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn summarize_gaussian_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["summarize", "--family", "gaussian", "--rho", "0.5"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("summary.csv"));
    let find = |q: &str, idx: &str| -> f64 {
        rows.iter().find(|r| r[0] == q && r[1] == idx).unwrap()[2].parse().unwrap()
    };
    assert!((find("eta", "[0,1]") - 0.75).abs() < 1e-6);
    assert!((find("alpha", "[0,1]") - 0.25).abs() < 1e-6);
    assert!((find("beta", "[0,1]") - 0.5).abs() < 5e-3);
    assert!((find("lambda", "[0.5,0.5]") - 2.0 / 3.0).abs() < 1e-6);
    assert!((find("tau", r#"{"delta":0.1,"subset":[0]}"#) - 0.75 / (1.1 - 0.1f64.sqrt())).abs() < 1e-6);
}

#[test]
fn summarize_independence() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["summarize", "--family", "independence"], dir.path());
    assert_eq!(code(&o), 0);
    let s = read_json(&dir.path().join("summary.json"));
    for e in s["lambda"].as_array().unwrap() {
        assert!((e["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert!((s["eta"][0]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    for e in s["tau"].as_array().unwrap() {
        let want = if e["subset"].as_array().unwrap().len() == 2 { 0.5 } else { 1.0 };
        assert!((e["value"].as_f64().unwrap() - want).abs() < 1e-12);
    }
    for e in s["cond"].as_array().unwrap() {
        assert_eq!(e["alpha"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn gauge_descriptor_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GaugeSpec::from_json(r#"{"dim":2,"family":"independence"}"#).unwrap();
    let path = dir.path().join("sum.json");
    std::fs::write(&path, spec.to_json()).unwrap();
    let o = run(&["summarize", "--gauge-json", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    let s = read_json(&dir.path().join("summary.json"));
    let back: GaugeSpec = serde_json::from_value(s["model"].clone()).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["summarize", "--family", "inverted-logistic", "--theta", "0.5"];
    assert_eq!(code(&run(&args, a.path())), 0);
    assert_eq!(code(&run(&[&args[..], &["--sequential"]].concat(), b.path())), 0);
    let read = |d: &Path| std::fs::read(d.join("summary.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn bad_descriptors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["summarize", "--gauge-json", r#"{"dim":2,"family":"nope"}"#], dir.path())), 1);
    assert_eq!(code(&run(&["summarize", "--family", "logistic-gp"], dir.path())), 1);
    assert_eq!(code(&run(&["summarize", "--family", "bogus"], dir.path())), 1);
    assert_eq!(code(&run(&["levelset", "--family", "independence", "--dim", "4"], dir.path())), 1);
}

#[test]
fn levelset_vertices_on_the_unit_level() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["levelset", "--family", "logistic-gp", "--theta", "0.4"], dir.path());
    assert_eq!(code(&o), 0);
    let g = Gauge::logistic_gp(0.4).unwrap();
    let rows = csv_rows(&dir.path().join("levelset.csv"));
    let boundary: Vec<[f64; 2]> = rows
        .iter()
        .filter(|r| r[0] == "boundary")
        .map(|r| [r[2].parse().unwrap(), r[3].parse().unwrap()])
        .collect();
    assert!(boundary.len() >= 400);
    for p in &boundary {
        assert!((g.value(p) - 1.0).abs() < 1e-8);
    }
    // eta point of an asymptotically dependent gauge is (1, 1)
    let eta = rows.iter().find(|r| r[0] == "eta").unwrap();
    assert_eq!(eta[2].parse::<f64>().unwrap(), 1.0);
    assert!(rows.iter().filter(|r| r[0] == "lambda").count() > 10);
}

#[test]
fn levelset_mesh_in_three_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["levelset", "--family", "gaussian", "--dim", "3", "--corr", "0.75,0.25,0.4", "--points", "20"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cells = csv_rows(&dir.path().join("levelset_cells.csv"));
    assert_eq!(cells.len(), 400);
    assert!(cells.iter().all(|c| c.len() == 3));
}

#[test]
fn sample_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sample", "--family", "gaussian", "--rho", "0.5", "--n", "20000", "--seed", "4"], dir.path());
    assert_eq!(code(&o), 0);
    let cloud = dir.path().join("cloud-meta_gaussian-n20000-seed4.csv");
    assert!(cloud.exists() && dir.path().join("cloud-meta_gaussian-n20000-seed4.json").exists());
    let o = run(
        &["estimate", "--cloud", cloud.to_str().unwrap(), "--quantity", "eta", "--bootstrap", "20", "--format", "json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let line: Value = serde_json::from_str(String::from_utf8(o.stdout).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(line["quantity"], "eta");
    assert!((line["value"].as_f64().unwrap() - 0.75).abs() < 0.2);
    assert!(line["se"].as_f64().unwrap() > 0.0);
}

#[test]
fn partial_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // too few points for the fixed-threshold regression at a small delta
    let o = run(
        &["estimate", "--family", "gaussian", "--rho", "0.5", "--n", "500", "--quantity", "all", "--delta-grid", "0.05", "--bootstrap", "0"],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let e = read_json(&dir.path().join("estimates.json"));
    assert!(!e["errors"].as_array().unwrap().is_empty());
    assert!(!e["estimates"].as_array().unwrap().is_empty());
}

#[test]
fn mixture_study_matches_piecewise_eta() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["study", "--kind", "mixture", "--family", "inverted-logistic", "--theta", "0.5"], dir.path());
    assert_eq!(code(&o), 0);
    let s = read_json(&dir.path().join("study.json"));
    assert_eq!(s["cells"].as_array().unwrap().len(), 21);
    assert_eq!(s["all_pass"], true);
}

#[test]
fn coherence_study_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["study", "--kind", "coherence", "--family", "gaussian", "--rho", "0.5", "--n", "5000", "--seeds", "0..2"];
    assert_eq!(code(&run(&args, a.path())), 0);
    assert_eq!(code(&run(&args, b.path())), 0);
    let read = |d: &Path| std::fs::read(d.join("study.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let s = read_json(&a.path().join("study.json"));
    assert_eq!(s["cells"].as_array().unwrap().len(), 6);
}
