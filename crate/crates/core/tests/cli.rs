use std::path::Path;
use std::process::Command as Proc;

use ampere2d::cli::{run, Command, RunConfig};
use serde_json::Value;

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn jorgens_builtin_solves() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut rc = RunConfig::new(Command::SolveGlobal, "builtin:jorgens", &out);
    rc.overrides.n_r = Some(128);
    let o = run(&rc);
    assert_eq!(o.exit_code, 0, "{}", o.message);
    let s = summary(&out);
    assert!(s["d_fit"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(s["converged"], Value::Bool(true));
    for name in ["manifest.json", "history.csv", "residual.csv", "profile.csv", "profile.json", "solution.bin"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert!(!tmp.path().join("run.partial").exists());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn radial_exterior_case() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ext");
    let mut rc = RunConfig::new(Command::SolveExterior, "builtin:exterior-radial", &out);
    rc.overrides.n_r = Some(128);
    rc.overrides.n_theta = Some(32);
    let o = run(&rc);
    assert_eq!(o.exit_code, 0, "{}", o.message);
    let s = summary(&out);
    assert!((s["d_fit"].as_f64().unwrap() - 0.5).abs() < 1e-3);
    assert!(s["boundary_error"].as_f64().unwrap() < 1e-6);
    assert!(out.join("cascade.csv").is_file());
}

#[test]
fn slow_decay_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = run(&RunConfig::new(Command::Validate, "builtin:inadmissible", &out));
    assert_eq!(o.exit_code, 2);
    let s = summary(&out);
    assert_eq!(s["passed"], Value::Bool(false));
    let names: Vec<&str> = s["violations"].as_array().unwrap().iter().map(|v| v["check"].as_str().unwrap()).collect();
    assert!(names.iter().any(|c| c.contains("beta > 2")), "{names:?}");
}

#[test]
fn solve_refuses_inadmissible_source() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let mut rc = RunConfig::new(Command::SolveGlobal, "builtin:inadmissible", &out);
    rc.overrides.n_r = Some(64);
    let o = run(&rc);
    assert_eq!(o.exit_code, 2);
    assert_eq!(summary(&out)["status"], "error");
}

#[test]
fn malformed_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("p.toml");
    std::fs::write(&cfg, "[source]\nkind = \"rational\"\neps = 0.1\nbeta = 4.0\n\n[solver]\ntolerance = 1e-9\n").unwrap();
    let out = tmp.path().join("o");
    let o = run(&RunConfig::new(Command::SolveGlobal, cfg.to_str().unwrap(), &out));
    assert_eq!(o.exit_code, 1);
    assert!(o.message.contains(":7") && o.message.contains("tolerance"), "{}", o.message);
    assert!(!out.exists());
}

#[test]
fn summaries_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("p.json");
    std::fs::write(&cfg, r#"{"source": {"kind": "angular", "eps": 0.1, "beta": 4.0, "kappa": 0.5, "m": 2}, "grid": {"n_r": 96, "n_theta": 32}}"#).unwrap();
    let mut bodies = Vec::new();
    for k in 0..2 {
        for cmd in [Command::Validate, Command::SolveGlobal] {
            let out = tmp.path().join(format!("{}-{k}", cmd.name()));
            let mut rc = RunConfig::new(cmd, cfg.to_str().unwrap(), &out);
            rc.seed = 42;
            let o = run(&rc);
            assert_eq!(o.exit_code, 0, "{}", o.message);
            bodies.push(std::fs::read(out.join("summary.json")).unwrap());
        }
    }
    assert_eq!(bodies[0], bodies[2]);
    assert_eq!(bodies[1], bodies[3]);
}

#[test]
fn previous_run_is_replaced() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    assert_eq!(run(&RunConfig::new(Command::Validate, "builtin:rational", &out)).exit_code, 0);
    std::fs::write(out.join("stale.txt"), "x").unwrap();
    assert_eq!(run(&RunConfig::new(Command::Validate, "builtin:rational", &out)).exit_code, 0);
    assert!(!out.join("stale.txt").exists());
}

#[test]
fn report_on_a_field_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let mut rc = RunConfig::new(Command::SolveGlobal, "builtin:rational", &out);
    rc.overrides.n_r = Some(128);
    assert_eq!(run(&rc).exit_code, 0);
    let rep = tmp.path().join("r");
    let mut rc = RunConfig::new(Command::Report, "builtin:rational", &rep);
    rc.overrides.n_r = Some(128);
    rc.field = Some(out.join("solution.bin"));
    let o = run(&rc);
    assert_eq!(o.exit_code, 0, "{}", o.message);
    let s = summary(&rep);
    assert_eq!(s["grid_matched"], Value::Bool(true));
    let g = summary(&out);
    assert!((s["max_residual"].as_f64().unwrap() - g["max_residual"].as_f64().unwrap()).abs() < 1e-15);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_ampere2d");
    let tmp = tempfile::tempdir().unwrap();
    let st = Proc::new(exe)
        .args(["validate", "--config", "builtin:rational", "--out"])
        .arg(tmp.path().join("a"))
        .env("AMPERE2D_THREADS", "2")
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["threads"], 2);
    let st = Proc::new(exe)
        .args(["validate", "--config", "builtin:inadmissible", "--out"])
        .arg(tmp.path().join("b"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = Proc::new(exe).args(["validate", "--config", "builtin:missing", "--out"]).arg(tmp.path().join("c")).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let st = Proc::new(exe).args(["solve-global", "--bogus"]).status().unwrap();
    assert_eq!(st.code(), Some(1));
}
