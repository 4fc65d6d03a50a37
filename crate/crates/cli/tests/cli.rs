use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn logwave(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logwave"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LOGWAVE_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn default_ode_passes_and_writes_series() {
    let dir = TempDir::new().unwrap();
    let o = logwave(dir.path(), &["ode"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ode_trajectory.txt", "rate_ratio.txt", "ode_summary.json", "manifest.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let ratio = fs::read_to_string(dir.path().join("rate_ratio.txt")).unwrap();
    assert!(ratio.starts_with('#'));
    for line in ratio.lines().skip(1) {
        assert_eq!(line.split_whitespace().count(), 2);
    }
}

#[test]
fn nonnegative_a_is_rejected_without_exploratory() {
    let dir = TempDir::new().unwrap();
    let o = logwave(dir.path(), &["ode", "--set", "a=0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("a = 0"));
    let o = logwave(dir.path(), &["ode", "--set", "a=0", "--set", "exploratory=true"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn ode_sweep_writes_one_trajectory_per_value() {
    let dir = TempDir::new().unwrap();
    logwave(dir.path(), &["ode", "--sweep", "a=-0.5,-1,-2"]);
    for a in ["-0.5", "-1", "-2"] {
        assert!(dir.path().join(format!("a={a}")).join("ode_trajectory.txt").is_file());
    }
}

#[test]
fn zero_data_has_zero_columns_except_shifted_ones() {
    let dir = TempDir::new().unwrap();
    let o = logwave(dir.path(), &["simulate", "--set", "initial=zero"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("trajectory.jsonl")).unwrap();
    let rec = logwave_core::record::TrajectoryRecord::from_json_lines(&text).unwrap();
    assert!(rec.snapshots.len() >= 100);
    for r in &rec.snapshots {
        let f = &r.functionals;
        assert_eq!((f.e, f.j, f.g, f.e0, f.f_poly, f.p_poly), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(f.l > 0.0);
        for e in &f.eta {
            assert_eq!((e.e_eta, e.h_eta, e.n_eta), (0.0, 0.0, 0.0));
        }
    }
    assert!(dir.path().join("plots").join("l.txt").is_file());
}

#[test]
fn malformed_config_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "n = [oops\n").unwrap();
    let o = logwave(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_ne!(code(&o), 0);
    fs::write(&cfg, "colour = 3\n").unwrap();
    let o = logwave(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn identities_suite_passes() {
    let dir = TempDir::new().unwrap();
    let o = logwave(dir.path(), &["verify", "--suite", "identities"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    assert!(report.contains("\"passed\":true"));
}

#[test]
fn theorem1_fails_on_fault_record() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    let o = logwave(&sim, &["simulate", "--set", "fault=flip-damping", "--set", "tune=false"]);
    assert!(sim.join("trajectory.jsonl").is_file(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = sim.join("trajectory.jsonl");
    let o = logwave(&dir.path().join("v"), &["verify", "--suite", "theorem1", rec.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
}

#[test]
fn missing_cadence_names_it() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    logwave(&sim, &["simulate", "--set", "initial=zero", "--set", "cadence=2.5"]);
    let rec = sim.join("trajectory.jsonl");
    let o = logwave(&dir.path().join("v"), &["verify", "--suite", "theorem1", rec.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unit cadence"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&logwave(dir.path(), &["verify", "--suite", "bogus"])), 2);
    assert_eq!(code(&logwave(dir.path(), &["verify", "--suite", "theorem1"])), 2);
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["simulate", "--set", "initial=profile", "--set", "amplitude=0.5", "--seed", "7"];
    logwave(&dir.path().join("a"), &args);
    logwave(&dir.path().join("b"), &args);
    let a = fs::read(dir.path().join("a/trajectory.jsonl")).unwrap();
    let b = fs::read(dir.path().join("b/trajectory.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
