use std::process::Command;

const SMALL: &str = r#"
name = "quiescent"
[box]
lengths = [6, 6, 6]
[fluid]
density = 3.0
kbt = 1.0
dt = 0.01
[pair]
a = 25
gamma = 4.5
[run]
steps = 20
rebuild_every = 5
thermo_every = 10
"#;

fn dpd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpd"))
}

#[test]
fn run_writes_outputs_and_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("q.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = dpd().args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--domains", "2x1x1"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("648 particles, 20 steps"), "{text}");
    let thermo = std::fs::read_to_string(out.join("thermo.csv")).unwrap();
    assert_eq!(thermo.lines().count(), 4);
    assert!(out.join("restart.bin").exists());

    let o = dpd()
        .args(["run", cfg.to_str().unwrap(), "--restart", out.join("restart.bin").to_str().unwrap(), "--steps", "10", "--domains", "2x1x1"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_errors_exit_with_category() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[box]\nlengths = [6, 6]\n").unwrap();
    let o = dpd().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error (config)"));
    let o = dpd().args(["run", "/no/such/file.cfg"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ulp_sweep_reports_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("log.csv");
    let o = dpd()
        .args(["ulp-sweep", "fastlog", "--samples", "1000", "--stride", "16777216", "--csv", csv.to_str().unwrap(), "--histogram"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("max relative error"), "{text}");
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("input,exponent,output,oracle,ulp_error"));
    assert!(rows.lines().count() > 1000);
    assert_eq!(dpd().args(["ulp-sweep", "nope"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn bench_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("q.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let o = dpd().args(["bench", cfg.to_str().unwrap(), "--steps", "10"]).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("MPS"));
    let o = dpd().args(["verify", "9"]).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("PASS C9"));
}
