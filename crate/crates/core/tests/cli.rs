use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neumann-lab"))
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    bin().env("NEUMANN_LAB_OUT", out).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["simulate", "--scenario", "blowup_fixed_gamma", "--set", "solver.resolution=16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["verdict"], "blowup");
    let dir = tmp.path().join("blowup_fixed_gamma");
    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,M,A,mass"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "blowup");
    let snap = std::fs::read_to_string(dir.join("config.snapshot")).unwrap();
    assert!(snap.contains("solver.resolution = 16"));
}

#[test]
fn identical_configs_give_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    let text = neumann_lab::harness::builtin("prevention_global")
        .unwrap()
        .with_override("solver.resolution", "16")
        .unwrap()
        .to_text();
    std::fs::write(&cfg, text).unwrap();
    let mut traces = Vec::new();
    for (k, sequential) in [true, true, false].into_iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let mut args = vec!["simulate", "--scenario", cfg.to_str().unwrap()];
        if sequential {
            args.push("--sequential");
        }
        let o = run_in(&out, &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        traces.push(std::fs::read(out.join("prevention_global").join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0], traces[2]);
}

#[test]
fn schedule_prints_capped_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(
        tmp.path(),
        &["schedule", "--mode", "capped", "--n", "2", "--q", "2", "--beta", "2", "--M0", "1", "--gamma1", "0.1", "--B", "5", "--chat", "2.39"],
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["mode"], "capped");
    assert_eq!(v["constants"]["alpha"], 0.875);
    assert!(v["constants"]["C_star"].as_f64().unwrap() > 1.0);
}

#[test]
fn failures_exit_nonzero_with_the_error_name() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "name = x\ndomain.kind = torus\n").unwrap();
    let o = run_in(tmp.path(), &["simulate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ConfigError"));

    let o = run_in(
        tmp.path(),
        &["schedule", "--mode", "global", "--n", "2", "--q", "2", "--beta", "0.5", "--M0", "1", "--gamma1", "0.1", "--chat", "1"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HypothesisViolation"));

    let o = run_in(tmp.path(), &["simulate", "--scenario", "blowup_fixed_gamma", "--bogus"]);
    assert!(!o.status.success());
}

#[test]
fn sequence_check_writes_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["sequence-check", "--J", "5000"]);
    assert!(o.status.success());
    let dir = tmp.path().join("sequence-check");
    for label in ["linear", "polynomial", "geometric", "saturating", "logarithmic", "sharpness"] {
        let csv = std::fs::read_to_string(dir.join(format!("{label}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 5001, "{label}");
    }
    assert!(stdout(&o).starts_with("label,weight,min_at_1000"));
}

#[test]
fn lifespan_scan_writes_scan_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    let text = neumann_lab::harness::builtin("blowup_fixed_gamma")
        .unwrap()
        .with_override("solver.resolution", "16")
        .unwrap()
        .to_text();
    std::fs::write(&cfg, text).unwrap();
    let o = run_in(
        tmp.path(),
        &["lifespan-scan", "--scenario", cfg.to_str().unwrap(), "--values", "0.4,0.2", "--levels", "1"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("blowup_fixed_gamma_scan").join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("param,T_star,uncertainty"));
    assert_eq!(lines.count(), 2);
}
