//! Decay of ‖f - M_q‖₁ from the double-Gaussian shock-tube start for a
//! list of Knudsen numbers.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::integrator::Solver;
use crate::phase_space::MomentBasis;

use super::config::ExperimentConfig;
use super::output::{ensure_dir, write_metadata, write_series_csv};
use super::sod_initial_field;

#[derive(Debug, Clone, Serialize)]
pub struct DecaySeries {
    pub epsilon: f64,
    /// (t, ‖f - M_q‖₁) at t = 0 and after every step.
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApDecayReport {
    pub runs: Vec<DecaySeries>,
    /// True when, at every output time t > 0, a smaller ε gives a strictly
    /// smaller norm.
    pub ordered: bool,
    /// Output times at which the ordering fails.
    pub violations: Vec<f64>,
}

/// Checks strict ordering at every common time t > 0; runs are compared in
/// order of decreasing ε.
pub fn ordering_violations(runs: &[DecaySeries]) -> Vec<f64> {
    let mut sorted: Vec<&DecaySeries> = runs.iter().collect();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let len = sorted.iter().map(|r| r.series.len()).min().unwrap_or(0);
    let mut bad = Vec::new();
    for k in 1..len {
        let t = sorted[0].series[k].0;
        if sorted
            .windows(2)
            .any(|w| !(w[0].series[k].1 > w[1].series[k].1))
        {
            bad.push(t);
        }
    }
    bad
}

pub fn run_ap_decay(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ApDecayReport> {
    let start = Instant::now();
    let gas = cfg.gas_statistics()?;
    let sgrid = cfg.spatial_grid(cfg.n_x)?;
    let vgrid = cfg.velocity_grid(cfg.t_left.max(cfg.t_right))?;
    let basis = MomentBasis::new(&vgrid);
    let (f0, _, _) = sod_initial_field(cfg, &gas, &sgrid, &basis)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }
    let mut runs = Vec::with_capacity(cfg.epsilons.len());
    for &epsilon in &cfg.epsilons {
        let solver_cfg = crate::integrator::SolverConfig {
            epsilon,
            ..cfg.solver_config()?
        };
        let solver = Solver::new(gas, sgrid, vgrid.clone(), solver_cfg, &f0)?;
        let traj = solver.run(&f0);
        let series: Vec<(f64, f64)> = traj
            .diagnostics
            .iter()
            .map(|d| (d.t, d.f_minus_mq_l1))
            .collect();
        if let Some(dir) = out {
            write_series_csv(&dir.join(format!("decay_eps_{epsilon:e}.csv")), &series)?;
            traj.write_diagnostics_csv(&dir.join(format!("diagnostics_eps_{epsilon:e}.csv")))?;
        }
        traj.into_result()?;
        runs.push(DecaySeries { epsilon, series });
    }
    let violations = ordering_violations(&runs);
    let report = ApDecayReport {
        ordered: violations.is_empty(),
        violations,
        runs,
    };
    if let Some(dir) = out {
        write_metadata(dir, cfg, start.elapsed(), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_check() {
        let run = |epsilon: f64, v: &[f64]| DecaySeries {
            epsilon,
            series: v.iter().enumerate().map(|(i, &n)| (i as f64, n)).collect(),
        };
        let good = [run(1e-3, &[1.0, 0.1, 0.01]), run(1e-1, &[1.0, 0.5, 0.4])];
        assert!(ordering_violations(&good).is_empty());
        let bad = [run(1e-3, &[1.0, 0.1, 0.5]), run(1e-1, &[1.0, 0.5, 0.4])];
        assert_eq!(ordering_violations(&bad), vec![2.0]);
    }
}
