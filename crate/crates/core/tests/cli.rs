use std::path::Path;
use std::process::{Command, Output};

use hps_core::io::{read_calibration, read_trace_csv};

fn hps(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hps")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn simulate_bare_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = hps(&["simulate", "--iexp", "1nA", "--out", "trace.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cols = read_trace_csv(&dir.path().join("trace.csv")).unwrap();
    let last = *cols.vpd.last().unwrap();
    assert!((last - 0.47).abs() < 1e-4, "{last}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.470000"));
}

#[test]
fn simulate_case_i_dark_sets_to_reset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "[pixel]\ntopology = case_i\n");
    let out = hps(&["simulate", "--config", &cfg, "--iexp", "0A", "--out", "trace.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cols = read_trace_csv(&dir.path().join("trace.csv")).unwrap();
    assert_eq!(cols.event.iter().filter(|e| e.contains("SetToReset")).count(), 1);
    assert!((cols.vpd.last().unwrap() - 1.17).abs() < 1e-3);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hps(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(hps(&["simulate", "--out", "x.csv"], dir.path()).status.code(), Some(1));
    assert_eq!(hps(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn bad_config_names_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "[photodiode]\nc_pd = 10banana\n");
    let out = hps(&["simulate", "--config", &cfg, "--iexp", "1nA", "--out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("c_pd"), "{err}");

    let bad_iexp = hps(&["simulate", "--iexp", "-1nA", "--out", "t.csv"], dir.path());
    assert_eq!(bad_iexp.status.code(), Some(1));
    let missing = hps(&["sweep", "--config", "nope.cfg", "--out", "s.csv"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "stiff.cfg",
        "[pixel]\ntopology = case_iii\n[solver]\nrel_tol = 1e-14\nabs_tol_v = 1e-18V\nabs_tol_gap = 1e-18nm\nmin_step = 1ns\nmax_step = 1ns\n",
    );
    let out = hps(&["simulate", "--config", &cfg, "--iexp", "100pA", "--out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", "[sweep]\npoints_per_decade = 2\n");
    let out = hps(&["sweep", "--config", &cfg, "--out", "sweep.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("i_exp_A,final_vpd_V,readable,events,error\n"));
    assert_eq!(text.lines().count(), 1 + 11);
}

#[test]
fn calibrate_writes_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "[calibration]\nrestarts = 1\n");
    let out = hps(&["calibrate", "--config", &cfg, "--out", "cal.json", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let file = read_calibration(&dir.path().join("cal.json")).unwrap();
    assert!(file.calibration.device.converged);
    assert!(file.calibration.device.residuals.iter().all(|r| r.relative_error.abs() <= r.tolerance));
    assert_eq!(file.key.len(), 64);
}
