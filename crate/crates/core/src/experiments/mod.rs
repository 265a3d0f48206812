//! The numerical experiments: Sod shock tube, refinement study, decay
//! towards equilibrium and the collision-operator invariant sweep.

pub mod ap_decay;
pub mod config;
pub mod convergence;
pub mod equilibrium_check;
pub mod output;
pub mod sod;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::{SpatialGrid, VelocityGrid};
use crate::phase_space::{equilibrium_from_moments, Conserved, MacroState, MomentBasis};
use crate::statistics::GasStatistics;

pub use ap_decay::{run_ap_decay, ApDecayReport};
pub use config::{ExperimentConfig, ExperimentKind};
pub use convergence::{run_convergence, ConvergenceReport};
pub use equilibrium_check::{run_equilibrium_check, EquilibriumReport};
pub use sod::{run_sod, SodReport};

/// Macroscopic data of one side of the shock tube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideState {
    pub rho: f64,
    pub u: [f64; 2],
    pub t: f64,
    pub z: f64,
    pub e: f64,
}

impl SideState {
    /// z from the density relation at fixed T, then e from the energy relation.
    pub fn from_density_temperature(
        rho: f64,
        u: [f64; 2],
        t: f64,
        gas: &GasStatistics,
    ) -> Result<Self> {
        let z = gas.fugacity_from_density(rho, t)?;
        let (_, e) = gas.moments_from_equilibrium(gas.params(z, t)?)?;
        Ok(Self { rho, u, t, z, e })
    }

    pub fn conserved(&self) -> Conserved {
        MacroState {
            rho: self.rho,
            u: self.u,
            e: self.e,
            z: self.z,
            t: self.t,
        }
        .conserved()
    }
}

/// (ρ/2)[G(u+δ, T') + G(u-δ, T')] with T' = e - |δ|²/2, projected onto the
/// exact discrete moments of (ρ, u, e).
pub fn double_gaussian(
    rho: f64,
    u: [f64; 2],
    e: f64,
    delta: [f64; 2],
    basis: &MomentBasis,
) -> Result<Vec<f64>> {
    let shift = 0.5 * (delta[0] * delta[0] + delta[1] * delta[1]);
    let tp = e - shift;
    if !(tp > 0.0) {
        return Err(Error::Config(format!(
            "double Gaussian needs e = {e} > |delta|^2/2 = {shift}"
        )));
    }
    let grid = basis.grid();
    let norm = rho / (2.0 * 2.0 * PI * tp);
    let mut f: Vec<f64> = grid
        .velocities()
        .map(|[vx, vy]| {
            let g = |s: f64| {
                let cx = vx - u[0] - s * delta[0];
                let cy = vy - u[1] - s * delta[1];
                (-(cx * cx + cy * cy) / (2.0 * tp)).exp()
            };
            norm * (g(1.0) + g(-1.0))
        })
        .collect();
    let m = MacroState {
        rho,
        u,
        e,
        z: 0.0,
        t: 0.0,
    }
    .conserved();
    let weight = f.clone();
    basis.project_weighted(&mut f, &m, &weight);
    Ok(f)
}

/// The shock-tube start: double Gaussians left and right of the interface.
pub fn sod_initial_field(
    cfg: &ExperimentConfig,
    gas: &GasStatistics,
    sgrid: &SpatialGrid,
    basis: &MomentBasis,
) -> Result<(DistributionField, SideState, SideState)> {
    let left = SideState::from_density_temperature(cfg.rho_left, [0.0, 0.0], cfg.t_left, gas)?;
    let right = SideState::from_density_temperature(cfg.rho_right, [0.0, 0.0], cfg.t_right, gas)?;
    let delta = [cfg.delta_x, cfg.delta_y];
    let fl = double_gaussian(left.rho, left.u, left.e, delta, basis)?;
    let fr = double_gaussian(right.rho, right.u, right.e, delta, basis)?;
    let field = DistributionField::from_cells(sgrid.n_x, basis.grid().len(), |i| {
        Ok(if sgrid.center(i) < cfg.interface {
            fl.clone()
        } else {
            fr.clone()
        })
    })?;
    Ok((field, left, right))
}

/// Discrete quantum Maxwellians of the given per-cell moments.
pub fn maxwellian_field(
    m: &[Conserved],
    gas: &GasStatistics,
    basis: &MomentBasis,
) -> Result<DistributionField> {
    let grid: &VelocityGrid = basis.grid();
    let mut data = Vec::with_capacity(m.len() * grid.len());
    for (i, mi) in m.iter().enumerate() {
        let (_, v) = equilibrium_from_moments(mi, gas, basis).map_err(|e| e.in_cell(i))?;
        data.extend_from_slice(&v);
    }
    DistributionField::from_vec(m.len(), grid.len(), data)
}

/// Σ|a - b| / Σ|b|.
pub fn relative_l1(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = b.iter().map(|y| y.abs()).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::moments;

    #[test]
    fn double_gaussian_matches_requested_moments() {
        let grid = VelocityGrid::new(32, 8.0).unwrap();
        let basis = MomentBasis::new(&grid);
        let f = double_gaussian(0.125, [0.1, 0.0], 0.3, [0.25, 0.25], &basis).unwrap();
        let (rho, u, e) = moments(&f, &grid).unwrap();
        assert!((rho - 0.125).abs() < 1e-14);
        assert!((u[0] - 0.1).abs() < 1e-13 && u[1].abs() < 1e-13);
        assert!((e - 0.3).abs() < 1e-13);
        assert!(double_gaussian(1.0, [0.0; 2], 0.05, [0.25, 0.25], &basis).is_err());
    }

    #[test]
    fn side_state_closed_forms() {
        let gas = GasStatistics::bose(9.0).unwrap();
        let s = SideState::from_density_temperature(1.0, [0.0; 2], 1.0, &gas).unwrap();
        let w = 9.0 / (2.0 * PI);
        assert!((s.z - (1.0 - (-w).exp())).abs() < 1e-15);
        let fermi = GasStatistics::fermi(1.0).unwrap();
        let s = SideState::from_density_temperature(0.125, [0.0; 2], 0.25, &fermi).unwrap();
        assert!((s.z - (0.125 / (2.0 * PI * 0.25)).exp_m1()).abs() < 1e-15);
    }
}
