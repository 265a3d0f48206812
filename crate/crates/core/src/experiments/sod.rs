//! Sod shock tube for the kinetic solver, compared with the Euler limit
//! when ε is small.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::euler::{exact_riemann_averages, run_euler, EulerField, Primitive};
use crate::integrator::Solver;
use crate::phase_space::{primitive_from_conserved, Conserved, MacroState, MomentBasis};
use crate::statistics::GasStatistics;

use super::config::ExperimentConfig;
use super::output::{ensure_dir, write_metadata, write_profile_csv, ProfileRow};
use super::{relative_l1, sod_initial_field};

/// Relative L¹ differences of ρ, e and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileDifference {
    pub rho: f64,
    pub e: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SodReport {
    pub n_x: usize,
    pub n_v: usize,
    pub steps: usize,
    pub step_size: f64,
    pub mu: f64,
    pub left_z: f64,
    pub right_z: f64,
    pub max_z: f64,
    /// Largest relative mismatch between the moments of f₀ and the configured states.
    pub initial_moment_error: f64,
    pub vs_exact: Option<ProfileDifference>,
    pub vs_euler: Option<ProfileDifference>,
    pub conservation_drift: Conserved,
    pub final_equilibrium_distance: f64,
    pub fermi_violation_steps: usize,
    pub collisions_evaluated: usize,
    #[serde(skip)]
    pub profile: Vec<ProfileRow>,
    #[serde(skip)]
    pub reference: Option<Vec<ProfileRow>>,
}

fn difference(a: &[ProfileRow], b: &[ProfileRow]) -> ProfileDifference {
    let col =
        |rows: &[ProfileRow], f: fn(&ProfileRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    ProfileDifference {
        rho: relative_l1(&col(a, |r| r.rho), &col(b, |r| r.rho)),
        e: relative_l1(&col(a, |r| r.e), &col(b, |r| r.e)),
        z: relative_l1(&col(a, |r| r.z), &col(b, |r| r.z)),
    }
}

fn rows_from_conserved(
    cells: &[Conserved],
    centers: &[f64],
    gas: &GasStatistics,
) -> Result<Vec<ProfileRow>> {
    cells
        .iter()
        .zip(centers)
        .enumerate()
        .map(|(i, (m, &x))| {
            let s = MacroState::from_conserved(m, gas).map_err(|e| e.in_cell(i))?;
            Ok(ProfileRow::new(x, &s))
        })
        .collect()
}

/// Runs the shock tube; writes profiles, diagnostics and metadata to `out`
/// when given.
pub fn run_sod(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SodReport> {
    let start = Instant::now();
    let gas = cfg.gas_statistics()?;
    let sgrid = cfg.spatial_grid(cfg.n_x)?;
    let vgrid = cfg.velocity_grid(cfg.t_left.max(cfg.t_right))?;
    let basis = MomentBasis::new(&vgrid);
    let (f0, left, right) = sod_initial_field(cfg, &gas, &sgrid, &basis)?;

    let mut initial_moment_error = 0.0f64;
    for (i, c) in f0.cells().enumerate() {
        let side = if sgrid.center(i) < cfg.interface {
            &left
        } else {
            &right
        };
        let (rho, u, e) = primitive_from_conserved(&basis.moments(c))?;
        let err = [
            (rho - side.rho) / side.rho,
            u[0] - side.u[0],
            u[1] - side.u[1],
            (e - side.e) / side.e,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
        initial_moment_error = initial_moment_error.max(err);
    }

    let solver = Solver::new(gas, sgrid, vgrid.clone(), cfg.solver_config()?, &f0)?;
    let traj = solver.run(&f0);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        traj.write_diagnostics_csv(&dir.join("sod_diagnostics.csv"))?;
    }
    let traj = traj.into_result()?;
    let centers = sgrid.centers();
    let profile: Vec<ProfileRow> = centers
        .iter()
        .zip(&traj.final_states)
        .map(|(&x, s)| ProfileRow::new(x, s))
        .collect();
    let max_z = profile.iter().map(|r| r.z).fold(0.0, f64::max);

    let (mut vs_exact, mut vs_euler, mut reference) = (None, None, None);
    if cfg.epsilon <= cfg.euler_threshold {
        let d = gas.dim as f64;
        let gamma = (d + 2.0) / d;
        let prim = |s: &super::SideState| Primitive {
            rho: s.rho,
            u: s.u,
            p: 2.0 / d * s.rho * s.e,
        };
        let exact = exact_riemann_averages(
            &prim(&left),
            &prim(&right),
            gamma,
            &sgrid,
            cfg.interface,
            cfg.t_final,
            16,
        )?;
        let exact_rows = rows_from_conserved(&exact, &centers, &gas)?;
        vs_exact = Some(difference(&profile, &exact_rows));
        let cells: Vec<Conserved> = centers
            .iter()
            .map(|&x| {
                if x < cfg.interface {
                    left.conserved()
                } else {
                    right.conserved()
                }
            })
            .collect();
        let euler = run_euler(
            &EulerField::new(cells, gas.dim)?,
            &sgrid,
            cfg.t_final,
            cfg.euler_cfl,
        )?;
        let euler_rows = rows_from_conserved(&euler.cells, &centers, &gas)?;
        vs_euler = Some(difference(&profile, &euler_rows));
        if let Some(dir) = out {
            write_profile_csv(&dir.join("euler_profile.csv"), &euler_rows)?;
            write_profile_csv(&dir.join("exact_profile.csv"), &exact_rows)?;
        }
        reference = Some(exact_rows);
    }

    let last = traj.diagnostics.last().copied();
    let report = SodReport {
        n_x: cfg.n_x,
        n_v: cfg.n_v,
        steps: last.map_or(0, |d| d.step),
        step_size: traj.step_size,
        mu: traj.mu,
        left_z: left.z,
        right_z: right.z,
        max_z,
        initial_moment_error,
        vs_exact,
        vs_euler,
        conservation_drift: traj.conservation_drift(),
        final_equilibrium_distance: last.map_or(0.0, |d| d.f_minus_mq_l1),
        fermi_violation_steps: traj.fermi_violation_steps,
        collisions_evaluated: traj.collisions_evaluated,
        profile,
        reference,
    };
    if let Some(dir) = out {
        write_profile_csv(&dir.join("sod_profile.csv"), &report.profile)?;
        write_metadata(dir, cfg, start.elapsed(), &report)?;
    }
    Ok(report)
}
