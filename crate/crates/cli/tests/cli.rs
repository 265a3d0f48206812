use std::process::Command;

fn qboltz() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qboltz"))
}

const SMALL: [&str; 6] = [
    "--set",
    "n_v=16",
    "--set",
    "velocity_half_width=6.0",
    "--threads",
    "1",
];

#[test]
fn sod_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = qboltz()
        .args(["sod", "--set", "n_x=30", "--set", "t_final=0.02", "--out"])
        .arg(dir.path())
        .args(SMALL)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("L1 vs exact Riemann"));
    assert!(dir.path().join("sod_profile.csv").is_file());
    assert!(dir.path().join("metadata.json").is_file());
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "levels = [8, 16, 32]\nt_final = 0.02\n").unwrap();
    let out = qboltz()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("conv"))
        .args(SMALL)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("least-squares slope"));
    assert!(dir.path().join("conv/convergence.csv").is_file());
}

#[test]
fn configuration_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["epsilon=0", "no_such_key=1"] {
        let out = qboltz()
            .args(["sod", "--set", bad, "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(3), "{bad}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn numerical_failure_exits_with_4() {
    // A CFL-violating fixed step drives the shock tube to negative energies.
    let dir = tempfile::tempdir().unwrap();
    let out = qboltz()
        .args([
            "sod",
            "--set",
            "n_x=30",
            "--set",
            "fixed_step=0.05",
            "--set",
            "epsilon=1e-2",
            "--out",
        ])
        .arg(dir.path())
        .args(SMALL)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let diag = std::fs::read_to_string(dir.path().join("sod_diagnostics.csv")).unwrap();
    assert!(diag.lines().last().unwrap().starts_with("# error:"));
}

#[test]
fn equilibrium_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qboltz()
        .args([
            "equilibrium-check",
            "--set",
            "sweep_z=[0.3]",
            "--set",
            "sweep_t=[1.0]",
            "--out",
        ])
        .arg(dir.path())
        .args(SMALL)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
