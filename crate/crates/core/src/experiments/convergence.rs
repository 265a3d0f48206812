//! Self-convergence study on smooth periodic data.
//!
//! Error_i = max over the common output times of ‖R ρ_i - ρ_{i-1}‖₁ / ‖ρ_{i-1}‖₁,
//! where R restricts level i to the cell centers of level i-1.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Solver;
use crate::phase_space::{Conserved, MomentBasis};

use super::config::ExperimentConfig;
use super::maxwellian_field;
use super::output::{ensure_dir, write_metadata};

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub n_x: usize,
    pub dx: f64,
    pub steps: usize,
    /// Difference to the next coarser level; absent on the coarsest.
    pub error: Option<f64>,
    /// log₂ of the error ratio to the previous level.
    pub local_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
    /// Least-squares slope of log Error_i against log Δx.
    pub slope: f64,
}

/// Density history (t, ρ per cell), one entry per step including t = 0.
pub type History = Vec<(f64, Vec<f64>)>;

/// ρ₀ = a + b cos 2πx and e₀ = c + d cos 2πx at the cell centers.
pub fn smooth_initial_moments(cfg: &ExperimentConfig, n_x: usize) -> Result<Vec<Conserved>> {
    let sgrid = cfg.spatial_grid(n_x)?;
    let len = cfg.x_hi - cfg.x_lo;
    Ok(sgrid
        .centers()
        .into_iter()
        .map(|x| {
            let c = (2.0 * PI * (x - cfg.x_lo) / len).cos();
            let rho = cfg.rho0_mean + cfg.rho0_amplitude * c;
            let e = cfg.e0_mean + cfg.e0_amplitude * c;
            [rho, 0.0, 0.0, rho * e]
        })
        .collect())
}

/// Runs one level and records ρ after every step.
pub fn density_history(cfg: &ExperimentConfig, n_x: usize) -> Result<History> {
    let gas = cfg.gas_statistics()?;
    let sgrid = cfg.spatial_grid(n_x)?;
    let m0 = smooth_initial_moments(cfg, n_x)?;
    let mut t_max = 0.0f64;
    for (i, m) in m0.iter().enumerate() {
        let p = gas
            .invert_moments(m[0], m[3] / m[0])
            .map_err(|e| e.in_cell(i))?;
        t_max = t_max.max(p.t);
    }
    let vgrid = cfg.velocity_grid(t_max)?;
    let basis = MomentBasis::new(&vgrid);
    let f0 = maxwellian_field(&m0, &gas, &basis)?;
    let solver = Solver::new(gas, sgrid, vgrid, cfg.solver_config()?, &f0)?;
    let h0 = solver.time_step();
    let t_final = cfg.t_final;
    let end_tol = 1e-12 * t_final.max(h0);
    let mut f = f0;
    let mut eq = solver.equilibrium(&f)?;
    let mut t = 0.0;
    let mut history = vec![(0.0, eq.conserved.iter().map(|m| m[0]).collect())];
    while t_final - t > end_tol {
        let h = h0.min(t_final - t);
        let res = solver.step(&f, &eq, h)?;
        t = if t_final - (t + h) <= end_tol {
            t_final
        } else {
            t + h
        };
        f = res.f;
        eq = res.equilibrium;
        history.push((t, eq.conserved.iter().map(|m| m[0]).collect()));
    }
    Ok(history)
}

/// Fourth-order restriction of point values to the centers of a grid with
/// half as many cells: (-1, 9, 9, -1)/16, wrapping periodically.
pub fn restrict(fine: &[f64]) -> Vec<f64> {
    let n = fine.len();
    let at = |k: isize| fine[k.rem_euclid(n as isize) as usize];
    (0..n / 2)
        .map(|i| {
            let k = 2 * i as isize;
            (-at(k - 1) + 9.0 * at(k) + 9.0 * at(k + 1) - at(k + 2)) / 16.0
        })
        .collect()
}

/// max over common times of the relative L¹ difference.
pub fn level_error(coarse: &History, fine: &History) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut matched = 0;
    let mut k = 0;
    for (t, rho_c) in coarse.iter().skip(1) {
        while k < fine.len() && fine[k].0 < t - 1e-12 * t.abs().max(1.0) {
            k += 1;
        }
        let Some((tf, rho_f)) = fine.get(k) else {
            break;
        };
        if (tf - t).abs() > 1e-12 * t.abs().max(1.0) {
            continue;
        }
        let r = restrict(rho_f);
        if r.len() != rho_c.len() {
            return Err(Error::GridMismatch(format!(
                "levels with {} and {} cells",
                rho_f.len(),
                rho_c.len()
            )));
        }
        worst = worst.max(super::relative_l1(&r, rho_c));
        matched += 1;
    }
    if matched == 0 {
        return Err(Error::Config("levels share no output time".into()));
    }
    Ok(worst)
}

/// Least-squares slope of y on x.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn run_convergence(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let histories: Vec<History> = cfg
        .levels
        .par_iter()
        .map(|&n| density_history(cfg, n))
        .collect::<Result<_>>()?;
    let len = cfg.x_hi - cfg.x_lo;
    let mut levels = Vec::with_capacity(histories.len());
    let (mut log_dx, mut log_err) = (Vec::new(), Vec::new());
    for (i, (&n, h)) in cfg.levels.iter().zip(&histories).enumerate() {
        let error = if i == 0 {
            None
        } else {
            Some(level_error(&histories[i - 1], h)?)
        };
        let local_slope = match (i, error) {
            (2.., Some(e)) => levels
                .last()
                .and_then(|l: &LevelResult| l.error)
                .map(|prev| (prev / e).log2()),
            _ => None,
        };
        if let Some(e) = error {
            log_dx.push((len / cfg.levels[i - 1] as f64).ln());
            log_err.push(e.ln());
        }
        levels.push(LevelResult {
            n_x: n,
            dx: len / n as f64,
            steps: h.len() - 1,
            error,
            local_slope,
        });
    }
    let slope = least_squares_slope(&log_dx, &log_err);
    let report = ConvergenceReport { levels, slope };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("convergence.csv"))?);
        writeln!(w, "level,n_x,error,slope")?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        for (i, l) in report.levels.iter().enumerate() {
            writeln!(w, "{i},{},{},{}", l.n_x, fmt(l.error), fmt(l.local_slope))?;
        }
        w.flush()?;
        write_metadata(dir, cfg, start.elapsed(), &report)?;
    }
    Ok(report)
}
