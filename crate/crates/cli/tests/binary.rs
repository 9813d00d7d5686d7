use std::fs;
use std::process::Command;

fn sqbath() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqbath"))
}

#[test]
fn presets_list_names_every_preset() {
    let out = sqbath().args(["presets", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1a", "fig1b", "fig2", "fig3a", "fig3b", "fig3c", "fig4"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.cfg");
    fs::write(&cfg, "model = xy_chain\nN = 2\nT = 1\nGamma = 0\ngamma_inverse = 0.1\n").unwrap();
    let status = sqbath()
        .args(["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("short.csv").exists());
    assert!(dir.path().join("short.meta").exists());
}

#[test]
fn sweep_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let status = sqbath()
        .args(["sweep", "preset:fig3c", "--set", "N=2", "--set", "T=0.5", "--threads", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("fig3c.sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model = adiabatic\nT = 10\nGamma = 0.3\ngamma_inverse = 0.2\nr = 1.5\n").unwrap();
    let out = sqbath().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r ∈ [0,1]"));

    fs::write(&cfg, "model = adiabatic\nT = 10\nGama = 0.3\n").unwrap();
    let out = sqbath().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_nonzero() {
    let out = sqbath().args(["oracle", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn integrator_abort_exits_with_its_own_code() {
    let out = sqbath()
        .args(["run", "preset:fig3c", "--set", "N=2", "--set", "gamma_inverse=0.0001", "--set", "dt=0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "sweep presets are rejected by `run`");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stiff.cfg");
    fs::write(&cfg, "model = xy_chain\nN = 2\nT = 1\nGamma = 0.3\nr = 0.5\ngamma_inverse = 0.0001\ndt = 0.01\n").unwrap();
    let out = sqbath().args(["run", cfg.to_str().unwrap(), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("aborted"));
}
