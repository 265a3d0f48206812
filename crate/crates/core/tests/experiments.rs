use std::fs;

use qboltz::experiments::{
    run_ap_decay, run_convergence, run_equilibrium_check, run_sod, ExperimentConfig, ExperimentKind,
};
use qboltz::statistics::Statistics;
use qboltz::Error;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        n_v: 16,
        velocity_half_width: Some(6.0),
        ..ExperimentConfig::defaults(kind)
    }
}

#[test]
fn file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        "epsilon = 0.01\nn_x = 64\ngas = \"fermi\"\ntableau = \"rk3\"\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::load(
        ExperimentKind::Sod,
        Some(&path),
        &["n_x=32".into(), "scheme=lw".into()],
    )
    .unwrap();
    assert_eq!(cfg.epsilon, 0.01);
    assert_eq!(cfg.n_x, 32);
    assert_eq!(cfg.gas, Statistics::Fermi);
    assert_eq!(cfg.tableau, "rk3");
    assert_eq!(cfg.solver_config().unwrap().tableau.stages(), 3);
    // Untouched keys keep the shock-tube defaults.
    assert_eq!(cfg.rho_right, 0.125);
}

#[test]
fn bad_configurations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "epsilonn = 0.01\n").unwrap();
    assert!(matches!(
        ExperimentConfig::load(ExperimentKind::Sod, Some(&path), &[]),
        Err(Error::Config(_))
    ));
    for set in [
        "epsilon=-1",
        "cfl=1.5",
        "levels=[10,30,60]",
        "tableau=rk9",
        "nonsense",
    ] {
        let r = ExperimentConfig::load(ExperimentKind::Convergence, None, &[set.into()]);
        assert!(matches!(r, Err(Error::Config(_))), "{set} accepted");
    }
    assert!(ExperimentConfig::load(
        ExperimentKind::Sod,
        None,
        &["experiment=\"convergence\"".into()]
    )
    .is_err());
    assert!(ExperimentConfig::load(
        ExperimentKind::Sod,
        Some(&dir.path().join("missing.toml")),
        &[]
    )
    .is_err());
}

#[test]
fn shock_tube_outputs() {
    let cfg = ExperimentConfig {
        n_x: 40,
        t_final: 0.05,
        ..small(ExperimentKind::Sod)
    };
    let dir = tempfile::tempdir().unwrap();
    let r = run_sod(&cfg, Some(dir.path())).unwrap();
    for name in [
        "sod_diagnostics.csv",
        "sod_profile.csv",
        "euler_profile.csv",
        "exact_profile.csv",
        "metadata.json",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let profile = fs::read_to_string(dir.path().join("sod_profile.csv")).unwrap();
    assert_eq!(profile.lines().next().unwrap(), "x,rho,ux,e,z,T");
    assert_eq!(profile.lines().count(), 41);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["experiment"], "sod");
    assert_eq!(meta["config"]["n_x"], 40);
    assert!(r.conservation_drift.iter().all(|d| *d < 1e-12));
    // Coarse and short, but already close to the fluid solution.
    assert!(r.vs_exact.unwrap().rho < 0.05);
    assert!(r.initial_moment_error < 1e-12);
}

#[test]
fn kinetic_shock_tube_skips_the_fluid_reference() {
    let cfg = ExperimentConfig {
        n_x: 20,
        t_final: 0.01,
        epsilon: 1e-2,
        ..small(ExperimentKind::Sod)
    };
    let r = run_sod(&cfg, None).unwrap();
    assert!(r.vs_exact.is_none() && r.vs_euler.is_none());
    assert!(r.collisions_evaluated > 0);
}

#[test]
fn decay_is_ordered_in_epsilon() {
    let cfg = ExperimentConfig {
        n_x: 20,
        t_final: 0.02,
        ..small(ExperimentKind::ApDecay)
    };
    let dir = tempfile::tempdir().unwrap();
    let r = run_ap_decay(&cfg, Some(dir.path())).unwrap();
    assert!(r.ordered, "violations at {:?}", r.violations);
    assert_eq!(r.runs.len(), 3);
    assert!(dir.path().join("decay_eps_1e-2.csv").is_file());
}

#[test]
fn small_equilibrium_sweep_passes() {
    let cfg = ExperimentConfig {
        sweep_z: vec![0.1, 0.7],
        sweep_t: vec![1.0],
        sweep_theta0: vec![1.0],
        random_states: 20,
        ..small(ExperimentKind::EquilibriumCheck)
    };
    let r = run_equilibrium_check(&cfg, None).unwrap();
    assert!(r.passed, "{:?}", r.failures);
    assert_eq!(r.points.len(), 4);
}

#[test]
fn coarse_refinement_study() {
    let cfg = ExperimentConfig {
        levels: vec![10, 20, 40],
        t_final: 0.05,
        ..small(ExperimentKind::Convergence)
    };
    let dir = tempfile::tempdir().unwrap();
    let r = run_convergence(&cfg, Some(dir.path())).unwrap();
    assert_eq!(r.levels.len(), 3);
    assert!(r.levels[0].error.is_none());
    assert!(r.levels[2].error.unwrap() < r.levels[1].error.unwrap());
    assert!(r.slope > 1.0, "{}", r.slope);
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "level,n_x,error,slope");
}
