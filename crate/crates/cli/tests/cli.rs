use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pacing(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacing"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn vo2_prints_the_conversion() {
    let dir = tempfile::tempdir().unwrap();
    let o = pacing(dir.path(), &["vo2", "60"]);
    assert!(o.status.success());
    assert!((stdout_json(&o)["sigma"].as_f64().unwrap() - 21.1).abs() < 1e-12);
}

#[test]
fn approx_reports_the_closed_form_chain() {
    let dir = tempfile::tempdir().unwrap();
    let o = pacing(dir.path(), &["approx", "--no-overlay"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j = stdout_json(&o);
    assert!((j["t_f"].as_f64().unwrap() - 245.19).abs() <= 0.5);
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("t,v,phase\n"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("turnpike.json")).unwrap()).unwrap();
    assert_eq!(saved, j);
    assert!(dir.path().join("approx.svg").exists());
}

#[test]
fn solve_writes_deterministic_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = pacing(a.path(), &["--nodes", "100", "solve"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t_f = stdout_json(&o)["t_f"].as_f64().unwrap();
    assert!((t_f - 244.0).abs() <= 2.0, "{t_f}");
    assert!(pacing(b.path(), &["--nodes", "100", "solve"]).status.success());
    let read = |d: &Path| std::fs::read(d.join("trajectory.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let csv = String::from_utf8(read(a.path())).unwrap();
    assert!(csv.starts_with("t,x,v,f,e,u\n"));
    assert_eq!(csv.lines().count(), 101);
    let svg = std::fs::read_to_string(a.path().join("solve.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
}

#[test]
fn fit_recovers_the_closed_form_runner() {
    let dir = tempfile::tempdir().unwrap();
    assert!(pacing(dir.path(), &["approx", "--no-overlay", "--samples", "1000"]).status.success());
    let profile = dir.path().join("profile.csv");
    let o = pacing(dir.path(), &["fit", profile.to_str().unwrap(), "--distance", "1500"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tau = stdout_json(&o)["inferred"]["tau"].as_f64().unwrap();
    assert!((tau - 0.932).abs() < 0.02 * 0.932, "{tau}");
    // the fitted configuration feeds straight back in
    let fitted = dir.path().join("fitted.json");
    let o = pacing(dir.path(), &["--config", fitted.to_str().unwrap(), "approx", "--no-overlay"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((stdout_json(&o)["t_f"].as_f64().unwrap() - 245.19).abs() < 0.5);
}

#[test]
fn fixtures_round_trip_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = pacing(dir.path(), &["fixtures"]);
    assert!(o.status.success());
    let names = stdout_json(&o)["fixtures"].as_array().unwrap().clone();
    assert!(names.len() >= 5);
    for n in names {
        let path = dir.path().join(format!("{}.json", n.as_str().unwrap()));
        let text = std::fs::read_to_string(&path).unwrap();
        pacing::ModelConfig::from_json(&text).unwrap();
    }
}

#[test]
fn bad_input_exits_one_with_an_error_document() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--set", "tau=-1", "approx", "--no-overlay"],
        vec!["--set", "nonsense", "approx"],
        vec!["--fixture", "nowhere", "approx"],
        vec!["vo2", "-3"],
        vec!["frobnicate"],
    ] {
        let o = pacing(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let e = stderr_json(&o);
        assert_eq!(e["error"]["exit_code"], 1);
        assert!(e["error"]["kind"].is_string() && e["error"]["message"].is_string());
    }
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = pacing(dir.path(), &["--nodes", "60", "--max-outer", "1", "solve"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_json(&o)["error"]["kind"], "solver_failure");
}

#[test]
fn help_documents_every_csv_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = pacing(dir.path(), &["--help"]);
    assert!(o.status.success());
    let help = String::from_utf8(o.stdout).unwrap();
    for col in ["t [s]", "x [m]", "v [m/s]", "f [m/s^2]", "e [J/kg]", "u [-]", "phase", "plateau_v", "beta", "PACING_LOG"] {
        assert!(help.contains(col), "{col} missing from --help");
    }
}

#[test]
fn slope_sweep_orders_the_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let o = pacing(dir.path(), &["--nodes", "100", "--tol", "1e-6", "slope-sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stdout_json(&o);
    let mean = |name: &str| {
        rows.as_array().unwrap().iter().find(|r| r["scenario"] == name).unwrap()["mean_v"].as_f64().unwrap()
    };
    assert!(mean("downhill_3pct") > mean("flat") && mean("flat") > mean("uphill_3pct"));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("scenario,t_f,mean_v,plateau_v\n"));
    assert_eq!(csv.lines().count(), 5);
}
