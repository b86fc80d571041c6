use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaussmink::io::{self, ReportFile};
use gaussmink::{Body, Grid, MeasureDensity};

fn gaussmink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussmink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_measure(dir: &Path, name: &str, m: &MeasureDensity) -> PathBuf {
    let path = dir.join(name);
    io::write_measure(&path, m).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn auto_mode_rejects_the_gap_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_measure(dir.path(), "u.json", &MeasureDensity::uniform(Grid::new(64).unwrap(), 1.0).unwrap());
    let out = gaussmink(&["solve", "--p", "0.5", "--measure", s(&f), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("p in (0,1) unsupported"));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn variational_on_uneven_measure_reports_the_error_name() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(64).unwrap();
    let m = MeasureDensity::from_fn(g, |t| 0.2 + 0.05 * t.cos()).unwrap();
    let f = write_measure(dir.path(), "f.json", &m);
    let out = gaussmink(&[
        "solve", "--mode", "variational", "--p", "-1", "--measure", s(&f),
        "--out", s(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("MeasureNotEven"));
}

#[test]
fn mode_and_exponent_must_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_measure(dir.path(), "u.json", &MeasureDensity::uniform(Grid::new(64).unwrap(), 0.3).unwrap());
    let out_path = dir.path().join("x.json");
    let out = gaussmink(&["solve", "--mode", "variational", "--p", "2", "--measure", s(&f), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
    let out = gaussmink(&["solve", "--mode", "continuation", "--p", "-1", "--measure", s(&f), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mass_bound_is_a_solver_error_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_measure(dir.path(), "u.json", &MeasureDensity::uniform(Grid::new(64).unwrap(), 0.45).unwrap());
    let out_path = dir.path().join("x.json");
    let out = gaussmink(&["solve", "--p", "1", "--measure", s(&f), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("MassBoundViolated"));
    let out = gaussmink(&["solve", "--p", "1", "--measure", s(&f), "--out", s(&out_path), "--override-mass"]);
    assert!(!stderr(&out).contains("MassBoundViolated"));
}

#[test]
fn solve_writes_a_report_that_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(128).unwrap();
    let m = MeasureDensity::even_from_fn(g, |t| (1.0 + 0.5 * (2.0 * t).cos()) / (2.0 * PI)).unwrap();
    let f = write_measure(dir.path(), "f.json", &m);
    let out_path = dir.path().join("k.json");
    let out = gaussmink(&["solve", "--p", "-1", "--measure", s(&f), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("mode=variational p=-1.0"));
    let rep: ReportFile = io::read_json(&out_path).unwrap();
    assert_eq!(rep.support.len(), 128);
    assert!(rep.lambda.is_some() && rep.homotopy_steps.is_none());
    assert!((rep.gamma - 0.5).abs() < 1e-10);
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("\"homotopy_steps\":null"));
}

#[test]
fn grid_flag_resamples_and_keeps_evenness() {
    let dir = tempfile::tempdir().unwrap();
    let m = MeasureDensity::even_from_fn(Grid::new(64).unwrap(), |t| (1.0 + 0.3 * (2.0 * t).cos()) / (2.0 * PI))
        .unwrap();
    let f = write_measure(dir.path(), "f.json", &m);
    let out_path = dir.path().join("k.json");
    let out = gaussmink(&["solve", "--p", "0", "--measure", s(&f), "--grid", "256", "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rep: ReportFile = io::read_json(&out_path).unwrap();
    assert_eq!(rep.support.len(), 256);
}

#[test]
fn measure_prints_closed_form_ball_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    io::write_body(&path, &Body::ball(Grid::new(128).unwrap(), 1.0).unwrap()).unwrap();
    for p in ["1", "2"] {
        let out = gaussmink(&["measure", "--body", s(&path), "--p", p]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("gamma,total,total_oracle,deficit"));
        let v: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[0] - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
        assert!((v[1] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((v[2] - (-0.5f64).exp()).abs() < 1e-12);
        assert!(v[3] >= 0.0);
    }
    let out = gaussmink(&["measure", "--body", s(&path), "--p", "-1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(','));
}

#[test]
fn malformed_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 3, "grid": 16, "support": [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1]}"#).unwrap();
    assert_eq!(gaussmink(&["measure", "--body", s(&bad), "--p", "1"]).status.code(), Some(2));
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(gaussmink(&["measure", "--body", s(&bad), "--p", "1"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(gaussmink(&["measure", "--body", s(&missing), "--p", "1"]).status.code(), Some(2));
}

#[test]
fn verify_flags() {
    assert_eq!(gaussmink(&["verify", "--suite", "nosuch"]).status.code(), Some(2));
    assert_eq!(gaussmink(&["verify"]).status.code(), Some(2));
    assert_eq!(gaussmink(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gaussmink(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let (json, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    let out = gaussmink(&[
        "verify", "--suite", "isoperimetric", "--seed", "7", "--count", "5",
        "--json", s(&json), "--csv", s(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let results: Vec<gaussmink::verify::SuiteResult> = io::read_json(&json).unwrap();
    assert_eq!(results.len(), 1);
    assert!(results[0].pass);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("suite,case,quantity,value,bound,violation\n"));
    assert_eq!(table.lines().count(), results[0].rows.len() + 1);
}

#[test]
fn sweep_emits_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(64).unwrap();
    let c0 = (-0.5f64).exp() / (2.0 * PI);
    let m = MeasureDensity::from_fn(g, |t| c0 * (1.0 + 0.2 * (2.0 * t).cos())).unwrap();
    let f = write_measure(dir.path(), "f.json", &m);
    let out = Command::new(env!("CARGO_BIN_EXE_gaussmink"))
        .args(["sweep", "--p-range", "2.5:3.5:0.5", "--measure", s(&f)])
        .env("GAUSSMINK_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,mass,gamma,S_p,deficit,homotopy_steps,iters,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    // S_p of the solution reproduces the mass of the prescribed measure
    for l in &lines[1..] {
        let v: Vec<&str> = l.split(',').collect();
        let (mass, total): (f64, f64) = (v[1].parse().unwrap(), v[3].parse().unwrap());
        assert!((mass - total).abs() < 1e-9);
    }

    let out = Command::new(env!("CARGO_BIN_EXE_gaussmink"))
        .args(["sweep", "--p-range", "2.5:3.5:0.5", "--measure", s(&f)])
        .env("GAUSSMINK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = gaussmink(&["sweep", "--mass-range", "0.1:0.5:0.2", "--measure", s(&f)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mass_sweep_marks_points_past_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_measure(dir.path(), "u.json", &MeasureDensity::uniform(Grid::new(64).unwrap(), 1.0).unwrap());
    let out = gaussmink(&["sweep", "--mass-range", "0.2:0.4:0.1", "--p", "1", "--measure", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let status: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(status, ["ok", "ok", "MassBoundViolated"]);
}
