//! Velocity moments, Maxwellians, the time derivative of the quantum
//! Maxwellian and projection onto the collision invariants.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::statistics::{EquilibriumParams, GasStatistics, Statistics, BOSE_FUGACITY_GAP};

/// Conserved moments (ρ, ρu_x, ρu_y, E) with E = ∫ ½|v|² f dv.
pub type Conserved = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub rho: f64,
    pub u: [f64; 2],
    pub e: f64,
    pub z: f64,
    pub t: f64,
}

impl MacroState {
    /// Populates (z, T) from (ρ, e) by inversion.
    pub fn from_conserved(m: &Conserved, gas: &GasStatistics) -> Result<Self> {
        let (rho, u, e) = primitive_from_conserved(m)?;
        let p = gas.invert_moments(rho, e)?;
        Ok(Self {
            rho,
            u,
            e,
            z: p.z,
            t: p.t,
        })
    }

    pub fn params(&self) -> EquilibriumParams {
        EquilibriumParams {
            z: self.z,
            t: self.t,
        }
    }

    pub fn conserved(&self) -> Conserved {
        let [ux, uy] = self.u;
        [
            self.rho,
            self.rho * ux,
            self.rho * uy,
            self.rho * (self.e + 0.5 * (ux * ux + uy * uy)),
        ]
    }
}

pub fn primitive_from_conserved(m: &Conserved) -> Result<(f64, [f64; 2], f64)> {
    let rho = m[0];
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonPositiveDensity(rho));
    }
    let u = [m[1] / rho, m[2] / rho];
    let e = (m[3] - 0.5 * (m[1] * u[0] + m[2] * u[1])) / rho;
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::NonPositiveEnergy(e));
    }
    Ok((rho, u, e))
}

/// Midpoint-rule conserved moments of one velocity slice.
pub fn conserved_moments(f: &[f64], grid: &VelocityGrid) -> Conserved {
    let n = grid.n_per_dim();
    let c = grid.coords();
    let mut m = [0.0; 4];
    for (iy, row) in f.chunks_exact(n).enumerate() {
        let vy = c[iy];
        let (mut s0, mut sx, mut s2) = (0.0, 0.0, 0.0);
        for (ix, &fv) in row.iter().enumerate() {
            let vx = c[ix];
            s0 += fv;
            sx += vx * fv;
            s2 += (vx * vx + vy * vy) * fv;
        }
        m[0] += s0;
        m[1] += sx;
        m[2] += vy * s0;
        m[3] += 0.5 * s2;
    }
    let w = grid.cell_volume();
    m.map(|x| x * w)
}

/// (ρ, u, e) by the midpoint rule.
pub fn moments(f: &[f64], grid: &VelocityGrid) -> Result<(f64, [f64; 2], f64)> {
    check_len(f, grid)?;
    let w = grid.cell_volume();
    let (mut rho, mut px, mut py) = (0.0, 0.0, 0.0);
    for (j, &fv) in f.iter().enumerate() {
        let [vx, vy] = grid.velocity(j);
        rho += fv;
        px += vx * fv;
        py += vy * fv;
    }
    rho *= w;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonPositiveDensity(rho));
    }
    let u = [px * w / rho, py * w / rho];
    let mut energy = 0.0;
    for (j, &fv) in f.iter().enumerate() {
        let [vx, vy] = grid.velocity(j);
        let (cx, cy) = (vx - u[0], vy - u[1]);
        energy += (cx * cx + cy * cy) * fv;
    }
    let e = 0.5 * energy * w / rho;
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::NonPositiveEnergy(e));
    }
    Ok((rho, u, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullMoments {
    pub rho: f64,
    pub u: [f64; 2],
    pub e: f64,
    /// Stress tensor ∫(v-u)⊗(v-u) f dv.
    pub stress: [[f64; 2]; 2],
    /// Heat flux ½∫(v-u)|v-u|² f dv.
    pub heat_flux: [f64; 2],
}

pub fn moments_full(f: &[f64], grid: &VelocityGrid) -> Result<FullMoments> {
    let (rho, u, e) = moments(f, grid)?;
    let w = grid.cell_volume();
    let mut stress = [[0.0; 2]; 2];
    let mut heat_flux = [0.0; 2];
    for (j, &fv) in f.iter().enumerate() {
        let [vx, vy] = grid.velocity(j);
        let c = [vx - u[0], vy - u[1]];
        let c2 = c[0] * c[0] + c[1] * c[1];
        for a in 0..2 {
            for b in 0..2 {
                stress[a][b] += c[a] * c[b] * fv * w;
            }
            heat_flux[a] += 0.5 * c[a] * c2 * fv * w;
        }
    }
    Ok(FullMoments {
        rho,
        u,
        e,
        stress,
        heat_flux,
    })
}

fn check_len(f: &[f64], grid: &VelocityGrid) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "slice has {} values, grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Writes M_q(v_j) = θ₀⁻¹ / (z⁻¹ e^{|v_j-u|²/2T} ∓ 1) into `out`.
pub fn quantum_maxwellian_into(
    params: EquilibriumParams,
    u: [f64; 2],
    gas: &GasStatistics,
    grid: &VelocityGrid,
    out: &mut [f64],
) -> Result<()> {
    let p = gas.params(params.z, params.t)?;
    check_len(out, grid)?;
    let n = grid.n_per_dim();
    let c = grid.coords();
    let ln_z = p.z.ln();
    let inv_2t = 0.5 / p.t;
    let inv_theta = 1.0 / gas.theta0;
    for (iy, row) in out.chunks_exact_mut(n).enumerate() {
        let dy = c[iy] - u[1];
        for (ix, value) in row.iter_mut().enumerate() {
            let dx = c[ix] - u[0];
            let x = (dx * dx + dy * dy) * inv_2t;
            *value = inv_theta * gas.kind.occupation(x, ln_z);
        }
    }
    Ok(())
}

pub fn quantum_maxwellian(
    params: EquilibriumParams,
    u: [f64; 2],
    gas: &GasStatistics,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    quantum_maxwellian_into(params, u, gas, grid, &mut out)?;
    Ok(out)
}

/// ρ/(2πT) e^{-|v-u|²/2T} on the d = 2 grid.
pub fn classical_maxwellian(rho: f64, u: [f64; 2], t: f64, grid: &VelocityGrid) -> Vec<f64> {
    let norm = rho / (2.0 * std::f64::consts::PI * t);
    grid.velocities()
        .map(|[vx, vy]| {
            let (dx, dy) = (vx - u[0], vy - u[1]);
            norm * (-(dx * dx + dy * dy) / (2.0 * t)).exp()
        })
        .collect()
}

/// Collision invariants (1, v_x, v_y, ½|v|²) on a grid with the inverse of
/// their Gram matrix under the midpoint rule.
#[derive(Debug, Clone)]
pub struct MomentBasis {
    grid: VelocityGrid,
    half_sq: Vec<f64>,
    gram_inv: Matrix4<f64>,
}

impl MomentBasis {
    pub fn new(grid: &VelocityGrid) -> Self {
        let half_sq: Vec<f64> = grid
            .velocities()
            .map(|[vx, vy]| 0.5 * (vx * vx + vy * vy))
            .collect();
        let w = grid.cell_volume();
        let mut gram = Matrix4::zeros();
        for (j, [vx, vy]) in grid.velocities().enumerate() {
            let phi = [1.0, vx, vy, half_sq[j]];
            for a in 0..4 {
                for b in 0..4 {
                    gram[(a, b)] += phi[a] * phi[b] * w;
                }
            }
        }
        let gram_inv = gram
            .try_inverse()
            .expect("Gram matrix of the collision invariants is singular");
        Self {
            grid: grid.clone(),
            half_sq,
            gram_inv,
        }
    }

    #[inline]
    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    #[inline]
    pub fn moments(&self, f: &[f64]) -> Conserved {
        conserved_moments(f, &self.grid)
    }

    /// Subtracts the ℓ²-orthogonal combination of invariants that moves the
    /// moments of `f` to `target`. Applied twice to reach roundoff.
    pub fn project_to(&self, f: &mut [f64], target: &Conserved) {
        let n = self.grid.n_per_dim();
        let c = self.grid.coords();
        for _ in 0..2 {
            let m = self.moments(f);
            let defect = Vector4::new(
                m[0] - target[0],
                m[1] - target[1],
                m[2] - target[2],
                m[3] - target[3],
            );
            let lambda = self.gram_inv * defect;
            for (iy, row) in f.chunks_exact_mut(n).enumerate() {
                let base = lambda[0] + lambda[2] * c[iy];
                let sq = &self.half_sq[iy * n..(iy + 1) * n];
                for ((value, &vx), &s) in row.iter_mut().zip(c).zip(sq) {
                    *value -= base + lambda[1] * vx + lambda[3] * s;
                }
            }
        }
    }

    /// Removes the discrete mass, momentum and energy content of `q`.
    pub fn conserve(&self, q: &mut [f64]) {
        self.project_to(q, &[0.0; 4]);
    }

    /// Like `project_to`, but the correction is w·(invariant combination),
    /// i.e. orthogonal in the inner product weighted by 1/w. Nodes with zero
    /// weight are left alone, so corrections do not leak into empty tails.
    /// Falls back to the unweighted projection if the weighted Gram matrix
    /// is singular.
    pub fn project_weighted(&self, f: &mut [f64], target: &Conserved, weight: &[f64]) {
        let cell = self.grid.cell_volume();
        let mut gram = Matrix4::zeros();
        for (j, [vx, vy]) in self.grid.velocities().enumerate() {
            let w = weight[j].max(0.0) * cell;
            let phi = [1.0, vx, vy, self.half_sq[j]];
            for a in 0..4 {
                for b in a..4 {
                    gram[(a, b)] += phi[a] * phi[b] * w;
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let Some(gram_inv) = gram
            .try_inverse()
            .filter(|g: &Matrix4<f64>| g.iter().all(|x| x.is_finite()))
        else {
            self.project_to(f, target);
            return;
        };
        for _ in 0..2 {
            let m = self.moments(f);
            let defect = Vector4::new(
                m[0] - target[0],
                m[1] - target[1],
                m[2] - target[2],
                m[3] - target[3],
            );
            let lambda = gram_inv * defect;
            for (j, [vx, vy]) in self.grid.velocities().enumerate() {
                let phi = lambda[0] + lambda[1] * vx + lambda[2] * vy + lambda[3] * self.half_sq[j];
                f[j] -= weight[j].max(0.0) * phi;
            }
        }
    }

    /// Weighted counterpart of `conserve`.
    pub fn conserve_weighted(&self, q: &mut [f64], weight: &[f64]) {
        self.project_weighted(q, &[0.0; 4], weight);
    }
}

/// Returns Q_raw with its invariant content projected out.
pub fn conserve_project(q_raw: &[f64], grid: &VelocityGrid) -> Vec<f64> {
    let mut q = q_raw.to_vec();
    MomentBasis::new(grid).conserve(&mut q);
    q
}

/// Builds the quantum Maxwellian whose discrete moments equal `m`.
///
/// (z, T) from the continuous inversion are corrected by Newton's method on
/// (ln z, ln T, u) against the midpoint-rule moments, so the equilibrium is a
/// true fixed point of the discrete moment map. If that fails the continuous
/// Maxwellian is projected onto the target moments instead.
/// The returned state carries the continuous (z, T).
pub fn equilibrium_from_moments(
    m: &Conserved,
    gas: &GasStatistics,
    basis: &MomentBasis,
) -> Result<(MacroState, Vec<f64>)> {
    let state = MacroState::from_conserved(m, gas)?;
    let grid = basis.grid();
    let mut values = vec![0.0; grid.len()];
    if discrete_maxwellian(&state, m, gas, basis, &mut values).is_err() {
        quantum_maxwellian_into(state.params(), state.u, gas, grid, &mut values)?;
    }
    let weight = values.clone();
    basis.project_weighted(&mut values, m, &weight);
    Ok((state, values))
}

pub fn equilibrium_from_f(
    f: &[f64],
    gas: &GasStatistics,
    grid: &VelocityGrid,
) -> Result<(MacroState, Vec<f64>)> {
    check_len(f, grid)?;
    let basis = MomentBasis::new(grid);
    equilibrium_from_moments(&basis.moments(f), gas, &basis)
}

fn discrete_maxwellian(
    state: &MacroState,
    target: &Conserved,
    gas: &GasStatistics,
    basis: &MomentBasis,
    out: &mut [f64],
) -> Result<()> {
    let grid = basis.grid();
    let w = grid.cell_volume();
    let theta = gas.signed_theta();
    let scale = [
        target[0],
        (2.0 * target[0] * target[3]).sqrt(),
        (2.0 * target[0] * target[3]).sqrt(),
        target[3],
    ];
    let ln_z_max = (-BOSE_FUGACITY_GAP).ln_1p();
    let (mut ln_z, mut ln_t, mut u) = (state.z.ln(), state.t.ln(), state.u);
    for _ in 0..30 {
        let params = EquilibriumParams {
            z: ln_z.exp(),
            t: ln_t.exp(),
        };
        quantum_maxwellian_into(params, u, gas, grid, out)?;
        let inv_t = 1.0 / params.t;
        let mut r = Vector4::<f64>::zeros();
        let mut jac = Matrix4::<f64>::zeros();
        for (j, [vx, vy]) in grid.velocities().enumerate() {
            let mv = out[j];
            let g = mv * (1.0 + theta * mv) * w;
            let (cx, cy) = (vx - u[0], vy - u[1]);
            let phi = [1.0, vx, vy, 0.5 * (vx * vx + vy * vy)];
            let dm = [
                g,
                g * 0.5 * (cx * cx + cy * cy) * inv_t,
                g * cx * inv_t,
                g * cy * inv_t,
            ];
            for a in 0..4 {
                r[a] += phi[a] * mv * w;
                for b in 0..4 {
                    jac[(a, b)] += phi[a] * dm[b];
                }
            }
        }
        let mut converged = true;
        for a in 0..4 {
            r[a] -= target[a];
            if r[a].abs() > 1e-14 * scale[a] {
                converged = false;
            }
        }
        if converged {
            return Ok(());
        }
        let step = jac.lu().solve(&(-r)).ok_or(Error::Convergence {
            what: "discrete Maxwellian Newton",
            iterations: 0,
        })?;
        if !step.iter().all(|s| s.is_finite()) || step[0].abs() > 1.0 || step[1].abs() > 1.0 {
            break;
        }
        ln_z += step[0];
        ln_t += step[1];
        u[0] += step[2];
        u[1] += step[3];
        if gas.kind == Statistics::Bose && ln_z >= ln_z_max {
            break;
        }
    }
    Err(Error::Convergence {
        what: "discrete Maxwellian Newton",
        iterations: 30,
    })
}

/// Time derivatives of (ρ, u, e).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MacroRates {
    pub rho: f64,
    pub u: [f64; 2],
    pub e: f64,
}

/// ∂tM_q = M_q(1 ± θ₀M_q)[A∂tρ + B∂te + C·∂tu] evaluated on the nodes,
/// with `mq` the Maxwellian values at those nodes.
pub fn dt_maxwellian_into(
    state: &MacroState,
    rates: &MacroRates,
    gas: &GasStatistics,
    grid: &VelocityGrid,
    mq: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_len(mq, grid)?;
    check_len(out, grid)?;
    let (m_z, n_z) = gas.eval_mn(state.z, state.t, state.e)?;
    let d = gas.dim as f64;
    let theta = gas.signed_theta();
    let inv_t = 1.0 / state.t;
    let a0 = m_z / state.rho * rates.rho - d / (2.0 * state.e) * m_z * rates.e;
    let a2 = (1.0 - n_z) / (d * state.t * state.rho) * rates.rho
        + n_z / (2.0 * state.e * state.t) * rates.e;
    for (j, [vx, vy]) in grid.velocities().enumerate() {
        let (cx, cy) = (vx - state.u[0], vy - state.u[1]);
        let c2 = cx * cx + cy * cy;
        let bracket = a0 + a2 * c2 + (cx * rates.u[0] + cy * rates.u[1]) * inv_t;
        let mv = mq[j];
        out[j] = mv * (1.0 + theta * mv) * bracket;
    }
    Ok(())
}

/// ∂tM_q for the Maxwellian of `state`.
pub fn dt_maxwellian(
    state: &MacroState,
    rates: &MacroRates,
    gas: &GasStatistics,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    let mq = quantum_maxwellian(state.params(), state.u, gas, grid)?;
    let mut out = vec![0.0; grid.len()];
    dt_maxwellian_into(state, rates, gas, grid, &mq, &mut out)?;
    Ok(out)
}
