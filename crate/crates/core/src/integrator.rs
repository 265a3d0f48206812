//! Exponential Runge-Kutta time stepping for
//!
//! ∂ₜf + v_x ∂ₓf = Q(f)/ε,
//!
//! written for w = (f - M_q) e^{μt/ε} so that the stiff relaxation is
//! integrated exactly. All stages are assembled in the expanded form
//!
//! f⁽ⁱ⁾ = M⁽ⁱ⁾ + (fⁿ - Mⁿ) e^{-cᵢλ} + Σⱼ aᵢⱼ e^{(cⱼ-cᵢ)λ} R⁽ʲ⁾,  λ = μh/ε,
//! R⁽ʲ⁾ = (h/ε)[Q(f⁽ʲ⁾) + μ(f⁽ʲ⁾ - M⁽ʲ⁾)] - h v_x ∂ₓf⁽ʲ⁾ - h ∂ₜM⁽ʲ⁾,
//!
//! which only ever evaluates exponentials of non-positive arguments. The
//! moments of every stage are advanced separately by the conservative
//! transport fluxes, M⁽ⁱ⁾ is rebuilt from them, and f⁽ⁱ⁾ is projected back
//! onto exactly those moments.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::{collide_into, CollisionKernelConfig, CollisionWorkspace};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::{SpatialGrid, VelocityGrid};
use crate::phase_space::{
    dt_maxwellian_into, equilibrium_from_moments, Conserved, MacroState, MomentBasis,
};
use crate::statistics::{GasStatistics, Statistics};
use crate::tableau::ButcherTableau;
use crate::transport::{macro_derivatives, moment_fluxes_of, transport_rhs_into, TransportScheme};

/// Collision evaluations whose total weight in every later stage stays
/// below this fraction of f are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    Fixed(f64),
    /// μ = β C_γ max_x[ρ(1 + θ₀ max_v f)], evaluated once on the initial data.
    RhoScaled(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub cfl: f64,
    pub mu_rule: MuRule,
    pub tableau: ButcherTableau,
    pub scheme: TransportScheme,
    pub t_final: f64,
    /// Overrides the CFL step when set.
    pub fixed_step: Option<f64>,
    /// Keep a snapshot every this many steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub kernel: CollisionKernelConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            cfl: 0.5,
            mu_rule: MuRule::RhoScaled(2.0),
            tableau: ButcherTableau::midpoint(),
            scheme: TransportScheme::Weno3,
            t_final: 0.1,
            fixed_step: None,
            snapshot_every: 0,
            kernel: CollisionKernelConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl = {} must lie in (0, 1]",
                self.cfl
            )));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!(
                "t_final = {} must be non-negative",
                self.t_final
            )));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config(format!("fixed step {h} must be positive")));
            }
        }
        match self.mu_rule {
            MuRule::Fixed(mu) | MuRule::RhoScaled(mu) if !(mu > 0.0) || !mu.is_finite() => {
                return Err(Error::Config(format!("mu parameter {mu} must be positive")));
            }
            _ => {}
        }
        // Re-validate in case the tableau was deserialized.
        ButcherTableau::new(
            &self.tableau.name,
            self.tableau.a.clone(),
            self.tableau.b.clone(),
            self.tableau.c.clone(),
        )?;
        self.kernel.validate()
    }
}

/// Resolves the penalty constant from the initial data.
pub fn resolve_mu(
    f: &DistributionField,
    gas: &GasStatistics,
    kernel: &CollisionKernelConfig,
    rule: MuRule,
    vgrid: &VelocityGrid,
) -> Result<f64> {
    let mu = match rule {
        MuRule::Fixed(mu) => mu,
        MuRule::RhoScaled(beta) => {
            let w = vgrid.cell_volume();
            let peak = f
                .cells()
                .map(|c| {
                    let rho: f64 = c.iter().sum::<f64>() * w;
                    let f_max = c.iter().fold(0.0f64, |m, &x| m.max(x));
                    rho * (1.0 + gas.theta0 * f_max)
                })
                .fold(0.0f64, f64::max);
            beta * kernel.c_gamma * peak
        }
    };
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Config(format!("resolved mu = {mu} is not positive")));
    }
    Ok(mu)
}

#[inline]
fn decay(exponent: f64) -> f64 {
    assert!(
        exponent <= 0.0,
        "positive exponent {exponent} in exponential scheme"
    );
    exponent.exp()
}

/// Per-cell macroscopic state together with the discrete Maxwellian.
#[derive(Debug, Clone)]
pub struct EquilibriumField {
    pub conserved: Vec<Conserved>,
    pub states: Vec<MacroState>,
    pub maxwellian: DistributionField,
}

#[derive(Debug)]
pub struct StepResult {
    pub f: DistributionField,
    pub equilibrium: EquilibriumField,
    /// Change of the domain totals Σᵢ mᵢΔx through the two boundaries.
    pub boundary: Conserved,
    /// ‖f⁽ⁱ⁾ - M⁽ⁱ⁾‖₁/‖f⁽ⁱ⁾‖₁ for every stage, followed by the same for fⁿ⁺¹.
    pub stage_deviation: Vec<f64>,
    pub collisions_evaluated: usize,
}

struct StageData {
    flux: Vec<Conserved>,
    residual: Option<DistributionField>,
    boundary: Conserved,
}

/// Everything needed to advance the kinetic equation on fixed grids.
pub struct Solver {
    pub gas: GasStatistics,
    pub sgrid: SpatialGrid,
    pub vgrid: VelocityGrid,
    pub config: SolverConfig,
    collision: CollisionWorkspace,
    mu: f64,
    /// Bound on the collision frequency used to decide when Q is negligible.
    rate: f64,
}

impl Solver {
    pub fn new(
        gas: GasStatistics,
        sgrid: SpatialGrid,
        vgrid: VelocityGrid,
        config: SolverConfig,
        initial: &DistributionField,
    ) -> Result<Self> {
        config.validate()?;
        initial.check_shape(sgrid.n_x, vgrid.len())?;
        let collision = CollisionWorkspace::new(&vgrid, config.kernel)?;
        let mu = resolve_mu(initial, &gas, &config.kernel, config.mu_rule, &vgrid)?;
        let loss = resolve_mu(
            initial,
            &gas,
            &config.kernel,
            MuRule::RhoScaled(1.0),
            &vgrid,
        )?;
        let reach = (2.0 * std::f64::consts::SQRT_2 * vgrid.half_width()).powf(config.kernel.gamma);
        let rate = mu.max(2.0 * std::f64::consts::PI * loss * reach);
        Ok(Self {
            gas,
            sgrid,
            vgrid,
            config,
            collision,
            mu,
            rate,
        })
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn basis(&self) -> &MomentBasis {
        self.collision.basis()
    }

    pub fn collision_workspace(&self) -> &CollisionWorkspace {
        &self.collision
    }

    /// h = cfl Δx / L unless a fixed step is configured.
    pub fn time_step(&self) -> f64 {
        self.config
            .fixed_step
            .unwrap_or(self.config.cfl * self.sgrid.dx / self.vgrid.max_speed())
    }

    #[inline]
    pub fn lambda(&self, h: f64) -> f64 {
        self.mu * h / self.config.epsilon
    }

    fn nv(&self) -> usize {
        self.vgrid.len()
    }

    pub fn conserved_field(&self, f: &DistributionField) -> Vec<Conserved> {
        f.cells().map(|c| self.basis().moments(c)).collect()
    }

    pub fn equilibrium_from_conserved(&self, m: &[Conserved]) -> Result<EquilibriumField> {
        let nv = self.nv();
        let cells: Vec<(MacroState, Vec<f64>)> = m
            .par_iter()
            .enumerate()
            .map(|(i, mi)| {
                equilibrium_from_moments(mi, &self.gas, self.basis()).map_err(|e| e.in_cell(i))
            })
            .collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(m.len() * nv);
        let mut states = Vec::with_capacity(m.len());
        for (s, v) in cells {
            states.push(s);
            data.extend_from_slice(&v);
        }
        Ok(EquilibriumField {
            conserved: m.to_vec(),
            states,
            maxwellian: DistributionField::from_vec(m.len(), nv, data)?,
        })
    }

    pub fn equilibrium(&self, f: &DistributionField) -> Result<EquilibriumField> {
        f.check_shape(self.sgrid.n_x, self.nv())?;
        self.equilibrium_from_conserved(&self.conserved_field(f))
    }

    /// Σᵢ Σⱼ |f - M| Δv² Δx.
    pub fn l1_distance(&self, f: &DistributionField, g: &DistributionField) -> f64 {
        let w = self.vgrid.cell_volume() * self.sgrid.dx;
        f.as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * w
    }

    pub fn l1_norm(&self, f: &DistributionField) -> f64 {
        f.as_slice().iter().map(|a| a.abs()).sum::<f64>() * self.vgrid.cell_volume() * self.sgrid.dx
    }

    /// Transport, moment fluxes and (when it matters) the residual R of one stage.
    fn stage_terms(
        &self,
        f: &DistributionField,
        eq: &EquilibriumField,
        h: f64,
        weight: f64,
    ) -> Result<(StageData, bool)> {
        let nv = self.nv();
        let mut transport = DistributionField::zeros(self.sgrid.n_x, nv);
        let bflux = transport_rhs_into(
            f,
            self.config.scheme,
            &self.sgrid,
            &self.vgrid,
            &mut transport,
        )?;
        let flux = moment_fluxes_of(&transport, &self.vgrid);
        let boundary = bflux.moment_rate(&self.vgrid);
        if weight == 0.0 {
            return Ok((
                StageData {
                    flux,
                    residual: None,
                    boundary,
                },
                false,
            ));
        }
        let eps = self.config.epsilon;
        let with_collision = h / eps * weight * self.rate >= NEGLIGIBLE_WEIGHT;
        let theta = self.gas.signed_theta();
        let mu = self.mu;
        let mut residual = DistributionField::zeros(self.sgrid.n_x, nv);
        residual
            .par_cells_mut()
            .zip(f.par_cells())
            .zip(transport.par_cells())
            .zip(eq.maxwellian.par_cells())
            .enumerate()
            .try_for_each_init(
                || (vec![0.0; nv], vec![0.0; nv]),
                |(dtm, q), (i, (((r, fc), tc), mc))| -> Result<()> {
                    let state = &eq.states[i];
                    let rates = macro_derivatives(&flux[i], state).map_err(|e| e.in_cell(i))?;
                    dt_maxwellian_into(state, &rates, &self.gas, &self.vgrid, mc, dtm)
                        .map_err(|e| e.in_cell(i))?;
                    self.basis().project_weighted(dtm, &flux[i].map(|x| -x), mc);
                    if with_collision {
                        collide_into(fc, theta, &self.collision, q).map_err(|e| e.in_cell(i))?;
                        let scale = h / eps;
                        for j in 0..nv {
                            r[j] = scale * (q[j] + mu * (fc[j] - mc[j])) + h * (tc[j] - dtm[j]);
                        }
                    } else {
                        for j in 0..nv {
                            r[j] = h * (tc[j] - dtm[j]);
                        }
                    }
                    Ok(())
                },
            )?;
        Ok((
            StageData {
                flux,
                residual: Some(residual),
                boundary,
            },
            with_collision,
        ))
    }

    /// Assembles M + (fⁿ - Mⁿ)e^{-cλ} + Σ coef_j R_j and projects each cell
    /// onto the moments of M.
    fn assemble(
        &self,
        f_n: &DistributionField,
        eq_n: &EquilibriumField,
        eq: &EquilibriumField,
        initial_decay: f64,
        terms: &[(f64, &DistributionField)],
    ) -> DistributionField {
        let nv = self.nv();
        let mut out = eq.maxwellian.clone();
        out.par_cells_mut().enumerate().for_each(|(i, o)| {
            let fc = f_n.cell(i);
            let mc = eq_n.maxwellian.cell(i);
            if initial_decay != 0.0 {
                for j in 0..nv {
                    o[j] += (fc[j] - mc[j]) * initial_decay;
                }
            }
            for (coef, r) in terms {
                let rc = r.cell(i);
                for j in 0..nv {
                    o[j] += coef * rc[j];
                }
            }
            self.basis()
                .project_weighted(o, &eq.conserved[i], eq.maxwellian.cell(i));
        });
        out
    }

    fn advance_moments(
        &self,
        m_n: &[Conserved],
        h: f64,
        coefs: &[(f64, &[Conserved])],
    ) -> Vec<Conserved> {
        m_n.iter()
            .enumerate()
            .map(|(i, m)| {
                let mut out = *m;
                for (coef, flux) in coefs {
                    for a in 0..4 {
                        out[a] -= h * coef * flux[i][a];
                    }
                }
                out
            })
            .collect()
    }

    /// One step of the configured scheme from fⁿ with its equilibrium.
    pub fn step(
        &self,
        f_n: &DistributionField,
        eq_n: &EquilibriumField,
        h: f64,
    ) -> Result<StepResult> {
        self.step_with(&self.config.tableau, f_n, eq_n, h)
    }

    /// One step with an explicit tableau.
    pub fn step_with(
        &self,
        tableau: &ButcherTableau,
        f_n: &DistributionField,
        eq_n: &EquilibriumField,
        h: f64,
    ) -> Result<StepResult> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("time step {h} must be positive")));
        }
        let k = tableau.stages();
        let (a, b, c) = (&tableau.a, &tableau.b, &tableau.c);
        let lam = self.lambda(h);
        // Largest coefficient multiplying R⁽ʲ⁾ anywhere downstream.
        let weights: Vec<f64> = (0..k)
            .map(|j| {
                let mut w = if b[j] != 0.0 {
                    b[j].abs() * decay((c[j] - 1.0) * lam)
                } else {
                    0.0
                };
                for i in j + 1..k {
                    if a[i][j] != 0.0 {
                        w = w.max(a[i][j].abs() * decay((c[j] - c[i]) * lam));
                    }
                }
                w
            })
            .collect();

        let mut stages: Vec<StageData> = Vec::with_capacity(k);
        let mut deviation = Vec::with_capacity(k + 1);
        let mut collisions = 0;
        let mut current_f: Option<DistributionField> = None;
        let mut current_eq: Option<EquilibriumField> = None;
        for i in 0..k {
            if i > 0 {
                let coefs: Vec<(f64, &[Conserved])> = (0..i)
                    .filter(|&j| a[i][j] != 0.0)
                    .map(|j| (a[i][j], stages[j].flux.as_slice()))
                    .collect();
                let m_i = self.advance_moments(&eq_n.conserved, h, &coefs);
                let eq_i = self.equilibrium_from_conserved(&m_i)?;
                let terms: Vec<(f64, &DistributionField)> = (0..i)
                    .filter(|&j| a[i][j] != 0.0)
                    .filter_map(|j| {
                        stages[j]
                            .residual
                            .as_ref()
                            .map(|r| (a[i][j] * decay((c[j] - c[i]) * lam), r))
                    })
                    .collect();
                let f_i = self.assemble(f_n, eq_n, &eq_i, decay(-c[i] * lam), &terms);
                deviation.push(self.l1_distance(&f_i, &eq_i.maxwellian) / self.l1_norm(&f_i));
                current_f = Some(f_i);
                current_eq = Some(eq_i);
            } else {
                deviation.push(self.l1_distance(f_n, &eq_n.maxwellian) / self.l1_norm(f_n));
            }
            let (f_i, eq_i) = match (&current_f, &current_eq) {
                (Some(f), Some(e)) if i > 0 => (f, e),
                _ => (f_n, eq_n),
            };
            let (data, collided) = self.stage_terms(f_i, eq_i, h, weights[i])?;
            collisions += usize::from(collided);
            stages.push(data);
        }

        let coefs: Vec<(f64, &[Conserved])> = (0..k)
            .filter(|&j| b[j] != 0.0)
            .map(|j| (b[j], stages[j].flux.as_slice()))
            .collect();
        let m_next = self.advance_moments(&eq_n.conserved, h, &coefs);
        let eq_next = self.equilibrium_from_conserved(&m_next)?;
        let terms: Vec<(f64, &DistributionField)> = (0..k)
            .filter(|&j| b[j] != 0.0)
            .filter_map(|j| {
                stages[j]
                    .residual
                    .as_ref()
                    .map(|r| (b[j] * decay((c[j] - 1.0) * lam), r))
            })
            .collect();
        let f_next = self.assemble(f_n, eq_n, &eq_next, decay(-lam), &terms);
        if !f_next.is_finite() {
            return Err(Error::NonFinite("time step"));
        }
        deviation.push(self.l1_distance(&f_next, &eq_next.maxwellian) / self.l1_norm(&f_next));
        let mut boundary = [0.0; 4];
        for j in 0..k {
            for q in 0..4 {
                boundary[q] += h * b[j] * stages[j].boundary[q];
            }
        }
        Ok(StepResult {
            f: f_next,
            equilibrium: eq_next,
            boundary,
            stage_deviation: deviation,
            collisions_evaluated: collisions,
        })
    }

    /// The same tableau applied to the fluid limit dm/dt = -F(M(m)), with
    /// F the kinetic transport fluxes of the discrete Maxwellian.
    pub fn fluid_limit_step(&self, m_n: &[Conserved], h: f64) -> Result<Vec<Conserved>> {
        let tab = &self.config.tableau;
        let k = tab.stages();
        let nv = self.nv();
        let mut fluxes: Vec<Vec<Conserved>> = Vec::with_capacity(k);
        for i in 0..k {
            let coefs: Vec<(f64, &[Conserved])> = (0..i)
                .filter(|&j| tab.a[i][j] != 0.0)
                .map(|j| (tab.a[i][j], fluxes[j].as_slice()))
                .collect();
            let m_i = self.advance_moments(m_n, h, &coefs);
            let eq = self.equilibrium_from_conserved(&m_i)?;
            let mut t = DistributionField::zeros(self.sgrid.n_x, nv);
            transport_rhs_into(
                &eq.maxwellian,
                self.config.scheme,
                &self.sgrid,
                &self.vgrid,
                &mut t,
            )?;
            fluxes.push(moment_fluxes_of(&t, &self.vgrid));
        }
        let coefs: Vec<(f64, &[Conserved])> = (0..k)
            .filter(|&j| tab.b[j] != 0.0)
            .map(|j| (tab.b[j], fluxes[j].as_slice()))
            .collect();
        Ok(self.advance_moments(m_n, h, &coefs))
    }

    fn diagnostics(
        &self,
        step: usize,
        t: f64,
        f: &DistributionField,
        eq: &EquilibriumField,
        boundary: Conserved,
    ) -> Diagnostics {
        let dx = self.sgrid.dx;
        let mut totals = [0.0; 4];
        for m in &eq.conserved {
            for a in 0..4 {
                totals[a] += m[a] * dx;
            }
        }
        let fermi_violation_max = match self.gas.kind {
            Statistics::Bose => 0.0,
            Statistics::Fermi => f
                .as_slice()
                .iter()
                .fold(0.0f64, |m, &x| m.max(self.gas.theta0 * x - 1.0)),
        };
        Diagnostics {
            step,
            t,
            mass: totals[0],
            momentum_x: totals[1],
            momentum_y: totals[2],
            energy: totals[3],
            f_minus_mq_l1: self.l1_distance(f, &eq.maxwellian),
            fermi_violation_max,
            boundary_outflow: boundary,
        }
    }

    /// Marches from `initial` to t_final with fixed steps, the last one
    /// shortened to land on t_final.
    pub fn run(&self, initial: &DistributionField) -> Trajectory {
        let mut traj = Trajectory {
            step_size: self.time_step(),
            mu: self.mu,
            ..Trajectory::default()
        };
        let eq0 = match self.equilibrium(initial) {
            Ok(eq) => eq,
            Err(e) => {
                traj.error = Some(e);
                traj.final_field = Some(initial.clone());
                return traj;
            }
        };
        let t_final = self.config.t_final;
        let h0 = self.time_step();
        let mut f = initial.clone();
        let mut eq = eq0;
        let mut t = 0.0;
        let mut step = 0;
        let mut outflow = [0.0; 4];
        traj.diagnostics
            .push(self.diagnostics(0, 0.0, &f, &eq, outflow));
        traj.snapshots.push(Snapshot {
            step: 0,
            t: 0.0,
            f: f.clone(),
        });
        let end_tol = 1e-12 * t_final.max(h0);
        while t_final - t > end_tol {
            let h = h0.min(t_final - t);
            match self.step(&f, &eq, h) {
                Ok(res) => {
                    step += 1;
                    t = if t_final - (t + h) <= end_tol {
                        t_final
                    } else {
                        t + h
                    };
                    for a in 0..4 {
                        outflow[a] += res.boundary[a];
                    }
                    f = res.f;
                    eq = res.equilibrium;
                    traj.collisions_evaluated += res.collisions_evaluated;
                    let d = self.diagnostics(step, t, &f, &eq, outflow);
                    if d.fermi_violation_max > 0.0 {
                        traj.fermi_violation_steps += 1;
                    }
                    traj.diagnostics.push(d);
                    let every = self.config.snapshot_every;
                    if every > 0 && step % every == 0 && t < t_final {
                        traj.snapshots.push(Snapshot {
                            step,
                            t,
                            f: f.clone(),
                        });
                    }
                }
                Err(e) => {
                    traj.error = Some(e);
                    break;
                }
            }
        }
        if traj.snapshots.last().map(|s| s.step) != Some(step) {
            traj.snapshots.push(Snapshot {
                step,
                t,
                f: f.clone(),
            });
        }
        traj.final_states = eq.states;
        traj.final_field = Some(f);
        traj
    }
}

/// Per-step totals and equilibrium distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub energy: f64,
    pub f_minus_mq_l1: f64,
    pub fermi_violation_max: f64,
    /// Cumulative change of the totals through the boundaries.
    pub boundary_outflow: Conserved,
}

impl Diagnostics {
    pub fn totals(&self) -> Conserved {
        [self.mass, self.momentum_x, self.momentum_y, self.energy]
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub f: DistributionField,
}

#[derive(Debug, Default)]
pub struct Trajectory {
    pub diagnostics: Vec<Diagnostics>,
    pub snapshots: Vec<Snapshot>,
    pub final_field: Option<DistributionField>,
    pub final_states: Vec<MacroState>,
    pub step_size: f64,
    pub mu: f64,
    pub collisions_evaluated: usize,
    pub fermi_violation_steps: usize,
    /// Set when the run stopped early; everything above is the partial result.
    pub error: Option<Error>,
}

impl Trajectory {
    pub fn into_result(self) -> Result<Self> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }

    /// Largest relative drift of the totals once boundary fluxes are
    /// accounted for. Momentum is measured against √(2·mass·energy).
    pub fn conservation_drift(&self) -> Conserved {
        let Some(first) = self.diagnostics.first() else {
            return [0.0; 4];
        };
        let m0 = first.totals();
        let scale = [
            m0[0].abs(),
            (2.0 * m0[0] * m0[3]).abs().sqrt(),
            (2.0 * m0[0] * m0[3]).abs().sqrt(),
            m0[3].abs(),
        ];
        let mut worst = [0.0f64; 4];
        for d in &self.diagnostics {
            let m = d.totals();
            for a in 0..4 {
                let drift = (m[a] - m0[a] - d.boundary_outflow[a]).abs() / scale[a];
                worst[a] = worst[a].max(drift);
            }
        }
        worst
    }

    pub fn write_diagnostics_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(
            w,
            "step,t,mass,momentum_x,momentum_y,energy,f_minus_Mq_L1,fermi_violation_max"
        )?;
        for d in &self.diagnostics {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                d.step,
                d.t,
                d.mass,
                d.momentum_x,
                d.momentum_y,
                d.energy,
                d.f_minus_mq_l1,
                d.fermi_violation_max
            )?;
        }
        if let Some(e) = &self.error {
            writeln!(w, "# error: {e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `solver` from `initial`.
pub fn run_simulation(solver: &Solver, initial: &DistributionField) -> Trajectory {
    solver.run(initial)
}

/// One forward-Euler exponential step regardless of the configured tableau.
pub fn step_forward_euler(
    solver: &Solver,
    f_n: &DistributionField,
    eq_n: &EquilibriumField,
    h: f64,
) -> Result<StepResult> {
    solver.step_with(&ButcherTableau::forward_euler(), f_n, eq_n, h)
}

/// One step of the configured κ-stage exponential Runge-Kutta scheme.
pub fn step_exp_rk(
    solver: &Solver,
    f_n: &DistributionField,
    eq_n: &EquilibriumField,
    h: f64,
) -> Result<StepResult> {
    solver.step(f_n, eq_n, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::phase_space::quantum_maxwellian;
    use crate::statistics::EquilibriumParams;

    fn small_solver(config: SolverConfig, f0: &DistributionField, n_x: usize) -> Solver {
        let gas = GasStatistics::bose(1.0).unwrap();
        let sgrid = SpatialGrid::new(n_x, 0.0, 1.0, Boundary::Periodic).unwrap();
        let vgrid = VelocityGrid::new(8, 6.0).unwrap();
        Solver::new(gas, sgrid, vgrid, config, f0).unwrap()
    }

    fn uniform_maxwellian(n_x: usize) -> DistributionField {
        let gas = GasStatistics::bose(1.0).unwrap();
        let vgrid = VelocityGrid::new(8, 6.0).unwrap();
        let mq = quantum_maxwellian(
            EquilibriumParams { z: 0.3, t: 1.0 },
            [0.0, 0.0],
            &gas,
            &vgrid,
        )
        .unwrap();
        DistributionField::from_cells(n_x, 64, |_| Ok(mq.clone())).unwrap()
    }

    #[test]
    fn mu_rules() {
        let f = uniform_maxwellian(6);
        let gas = GasStatistics::bose(1.0).unwrap();
        let vgrid = VelocityGrid::new(8, 6.0).unwrap();
        let k = CollisionKernelConfig::default();
        assert_eq!(
            resolve_mu(&f, &gas, &k, MuRule::Fixed(3.0), &vgrid).unwrap(),
            3.0
        );
        let mu1 = resolve_mu(&f, &gas, &k, MuRule::RhoScaled(2.0), &vgrid).unwrap();
        let mut doubled = f.clone();
        doubled.as_mut_slice().iter_mut().for_each(|x| *x *= 2.0);
        let mu2 = resolve_mu(&doubled, &gas, &k, MuRule::RhoScaled(2.0), &vgrid).unwrap();
        assert!(mu2 >= 2.0 * mu1);
    }

    #[test]
    fn uniform_equilibrium_is_a_fixed_point() {
        let f0 = uniform_maxwellian(6);
        for tableau in [
            ButcherTableau::forward_euler(),
            ButcherTableau::midpoint(),
            ButcherTableau::heun3(),
        ] {
            for eps in [1.0, 1e-6] {
                let config = SolverConfig {
                    epsilon: eps,
                    tableau: tableau.clone(),
                    ..Default::default()
                };
                let s = small_solver(config, &f0, 6);
                let eq = s.equilibrium(&f0).unwrap();
                let r = s.step(&f0, &eq, 0.01).unwrap();
                // The discrete Q does not vanish on M, so only the stiff
                // limit is a fixed point; the moments are kept in both cases.
                let diff = s.l1_distance(&r.f, &f0) / s.l1_norm(&f0);
                if eps < 1e-3 {
                    assert!(diff < 1e-13, "{} eps={eps}: {diff}", tableau.name);
                }
                for (a, b) in s.conserved_field(&r.f).iter().zip(&eq.conserved) {
                    for q in 0..4 {
                        assert!((a[q] - b[q]).abs() < 1e-13, "{a:?} vs {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_final_time_keeps_initial_snapshot_only() {
        let f0 = uniform_maxwellian(6);
        let config = SolverConfig {
            t_final: 0.0,
            ..Default::default()
        };
        let traj = small_solver(config, &f0, 6).run(&f0);
        assert!(traj.error.is_none());
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.diagnostics.len(), 1);
        assert_eq!(traj.final_field.unwrap(), f0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = SolverConfig {
            cfl: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    #[should_panic(expected = "positive exponent")]
    fn positive_exponents_are_refused() {
        decay(1e-3);
    }
}
