use std::path::Path;
use std::process::{Command, Output};

use boussinesq::io::{load_checkpoint, read_csv};

fn bq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bq")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, format!("{body}\noutput.dir = {}\n", dir.join("out").display())).unwrap();
    path.display().to_string()
}

#[test]
fn lists_every_scenario() {
    let out = bq(&["list-scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "max_principle",
        "overshoot_decay",
        "absorbing_ball",
        "uniform_bounds",
        "continuity_lipschitz",
        "attractor_probe",
        "mms_convergence",
    ] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn passing_run_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario.name = max_principle\n\
         grid.nx = 16\ngrid.ny = 8\n\
         model.preset = quadratic-kappa\n\
         stepper.dt = 1e-3\nstepper.t_end = 0.1\nstepper.record_every = 10\n\
         initial.preset = single-mode\ninitial.amplitude = 0.5\ninitial.theta_amplitude = 0.8",
    );
    let out = bq(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    let files = manifest["files"].as_array().unwrap();
    let csv = files.iter().find_map(|f| f.as_str().filter(|f| f.ends_with(".csv"))).unwrap();
    assert_eq!(read_csv(Path::new(csv)).unwrap().len(), 100 / 10 + 1);
    let chk = files.iter().find_map(|f| f.as_str().filter(|f| f.ends_with(".bqchk"))).unwrap();
    assert!((load_checkpoint(Path::new(chk)).unwrap().t - 0.1).abs() < 1e-12);
}

#[test]
fn failed_check_exits_one() {
    // the overshoot is gone long before the fit window opens
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario.name = overshoot_decay\n\
         scenario.fit_start = 1\n\
         grid.nx = 16\ngrid.ny = 8\n\
         model.preset = constant\n\
         stepper.dt = 1e-3\nstepper.t_end = 1.5\nstepper.record_every = 10\n\
         initial.preset = overshoot\ninitial.theta_amplitude = 10",
    );
    let out = bq(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario.name = max_principle\ngrid.nz = 16");
    let out = bq(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));

    let out = bq(&["run", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(2));

    let out = bq(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_reports_violations() {
    let out = bq(&["audit", "--model", "quadratic-kappa"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("transform identities"));

    let out = bq(&["audit", "--model", "constant", "--kappa0", "-1"]);
    assert_ne!(out.status.code(), Some(0));
}
