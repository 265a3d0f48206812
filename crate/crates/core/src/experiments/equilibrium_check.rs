//! Sweep of the discrete collision operator over (gas, θ₀, z, T): residual
//! on the Maxwellian, conservation, sign of the entropy production on
//! random perturbations and the classical limit.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collision::{collide_classical, collide_direct, entropy_production, CollisionWorkspace};
use crate::error::Result;
use crate::grid::VelocityGrid;
use crate::phase_space::{classical_maxwellian, quantum_maxwellian};
use crate::statistics::{GasStatistics, Statistics};

use super::config::ExperimentConfig;
use super::output::{ensure_dir, write_metadata};

/// Tolerance on |moments of Q| relative to the moments of f.
pub const MOMENT_TOL: f64 = 1e-13;
/// Largest admissible (positive) entropy production.
pub const ENTROPY_TOL: f64 = 1e-10;
/// Largest admissible quantum-vs-classical residual difference.
pub const CLASSICAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub gas: Statistics,
    pub theta0: f64,
    pub z: f64,
    pub t: f64,
    /// Skipped by the Bose fugacity guard.
    pub excluded: bool,
    /// max|Q(M_q)| / max M_q.
    pub residual: f64,
    pub moment_error: f64,
    /// Largest entropy production over the random perturbations.
    pub entropy_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalDelta {
    pub t: f64,
    /// max|Q_q(M_q) - Q_c(M_c)| / max M_c.
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub points: Vec<PointResult>,
    pub classical: Vec<ClassicalDelta>,
    pub failures: Vec<String>,
    pub passed: bool,
}

fn relative_moment_error(ws: &CollisionWorkspace, f: &[f64], q: &[f64]) -> f64 {
    let mq = ws.basis().moments(q);
    let mf = ws.basis().moments(f);
    let scale = [
        mf[0],
        mf[0].max(mf[3]).sqrt() * mf[0].sqrt(),
        mf[0].max(mf[3]).sqrt() * mf[0].sqrt(),
        mf[3],
    ];
    (0..4).map(|a| mq[a].abs() / scale[a]).fold(0.0, f64::max)
}

/// Multiplies every node by 1 + a·U(-1, 1); fermion values stay below 1/θ₀.
pub fn perturb(f: &[f64], amplitude: f64, gas: &GasStatistics, rng: &mut ChaCha8Rng) -> Vec<f64> {
    f.iter()
        .map(|&v| {
            let p = v * (1.0 + amplitude * rng.random_range(-1.0..1.0));
            match gas.kind {
                Statistics::Fermi => p.min(0.999 / gas.theta0),
                Statistics::Bose => p,
            }
        })
        .collect()
}

pub fn run_equilibrium_check(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<EquilibriumReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut workspaces: BTreeMap<u64, CollisionWorkspace> = BTreeMap::new();
    let mut workspace = |t: f64| -> Result<CollisionWorkspace> {
        let grid = cfg.velocity_grid(t)?;
        let key = grid.half_width().to_bits();
        if let Some(ws) = workspaces.get(&key) {
            return Ok(ws.clone());
        }
        let ws = CollisionWorkspace::new(&grid, cfg.kernel())?;
        workspaces.insert(key, ws.clone());
        Ok(ws)
    };
    let per_point = (cfg.random_states / 10).max(1);
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for kind in [Statistics::Bose, Statistics::Fermi] {
        for &theta0 in &cfg.sweep_theta0 {
            let gas = GasStatistics::new(kind, theta0, 2)?;
            for &z in &cfg.sweep_z {
                for &t in &cfg.sweep_t {
                    let mut point = PointResult {
                        gas: kind,
                        theta0,
                        z,
                        t,
                        excluded: false,
                        residual: f64::NAN,
                        moment_error: f64::NAN,
                        entropy_max: f64::NAN,
                    };
                    if kind == Statistics::Bose && z > cfg.bose_z_cap {
                        point.excluded = true;
                        points.push(point);
                        continue;
                    }
                    let ws = workspace(t)?;
                    let grid: &VelocityGrid = ws.grid();
                    let m = quantum_maxwellian(gas.params(z, t)?, [0.0, 0.0], &gas, grid)?;
                    let q = collide_direct(&m, &gas, &ws)?;
                    let m_max = m.iter().fold(0.0f64, |a, &b| a.max(b));
                    point.residual = q.iter().fold(0.0f64, |a, &b| a.max(b.abs())) / m_max;
                    point.moment_error = relative_moment_error(&ws, &m, &q);
                    let mut entropy_max = f64::NEG_INFINITY;
                    for _ in 0..per_point {
                        let f = perturb(&m, cfg.perturbation, &gas, &mut rng);
                        let qf = collide_direct(&f, &gas, &ws)?;
                        point.moment_error =
                            point.moment_error.max(relative_moment_error(&ws, &f, &qf));
                        entropy_max =
                            entropy_max.max(entropy_production(&f, &qf, &gas, grid)?.value);
                    }
                    point.entropy_max = entropy_max;
                    let label = format!("{} theta0={theta0} z={z} T={t}", kind.name());
                    if !(point.moment_error <= MOMENT_TOL) {
                        failures.push(format!("{label}: moments of Q = {:e}", point.moment_error));
                    }
                    if !(entropy_max <= ENTROPY_TOL) {
                        failures.push(format!("{label}: entropy production {entropy_max:e} > 0"));
                    }
                    points.push(point);
                }
            }
        }
    }

    let mut classical = Vec::new();
    for &t in &cfg.sweep_t {
        let ws = workspace(t)?;
        let grid = ws.grid();
        let mut worst = 0.0f64;
        for kind in [Statistics::Bose, Statistics::Fermi] {
            let gas = GasStatistics::new(kind, cfg.classical_theta0, 2)?;
            let rho = 1.0;
            let z = gas.fugacity_from_density(rho, t)?;
            let mq = quantum_maxwellian(gas.params(z, t)?, [0.0, 0.0], &gas, grid)?;
            let mc = classical_maxwellian(rho, [0.0, 0.0], t, grid);
            let qq = collide_direct(&mq, &gas, &ws)?;
            let qc = collide_classical(&mc, &ws)?;
            let scale = mc.iter().fold(0.0f64, |a, &b| a.max(b));
            let delta = qq
                .iter()
                .zip(&qc)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale;
            worst = worst.max(delta);
        }
        if !(worst <= CLASSICAL_TOL) {
            failures.push(format!("classical limit at T={t}: {worst:e}"));
        }
        classical.push(ClassicalDelta { t, delta: worst });
    }

    let report = EquilibriumReport {
        passed: failures.is_empty(),
        points,
        classical,
        failures,
    };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_metadata(dir, cfg, start.elapsed(), &report)?;
    }
    Ok(report)
}
