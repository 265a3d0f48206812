//! Flat key/value experiment configuration: built-in defaults per
//! experiment, then a TOML file, then `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collision::CollisionKernelConfig;
use crate::error::{Error, Result};
use crate::grid::{Boundary, SpatialGrid, VelocityGrid};
use crate::integrator::{MuRule, SolverConfig};
use crate::statistics::{GasStatistics, Statistics};
use crate::tableau::ButcherTableau;
use crate::transport::TransportScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sod,
    Convergence,
    ApDecay,
    EquilibriumCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sod => "sod",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::ApDecay => "ap_decay",
            ExperimentKind::EquilibriumCheck => "equilibrium_check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuKind {
    RhoScaled,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub gas: Statistics,
    pub theta0: f64,
    pub epsilon: f64,
    /// Knudsen numbers of the decay comparison.
    pub epsilons: Vec<f64>,
    pub cfl: f64,
    pub mu_rule: MuKind,
    /// β for `rho_scaled`, the value itself for `fixed`.
    pub mu: f64,
    pub tableau: String,
    pub scheme: TransportScheme,
    pub t_final: f64,
    pub fixed_step: Option<f64>,
    pub snapshot_every: usize,
    pub n_x: usize,
    /// Cell counts of the refinement study, coarse to fine.
    pub levels: Vec<usize>,
    pub n_v: usize,
    /// Velocity box half-width L; derived from the initial temperature if unset.
    pub velocity_half_width: Option<f64>,
    pub n_sigma: usize,
    pub c_gamma: f64,
    pub vhs_gamma: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub interface: f64,
    pub boundary: Boundary,
    pub rho_left: f64,
    pub t_left: f64,
    pub rho_right: f64,
    pub t_right: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub rho0_mean: f64,
    pub rho0_amplitude: f64,
    pub e0_mean: f64,
    pub e0_amplitude: f64,
    /// The Euler reference is computed when ε is at most this.
    pub euler_threshold: f64,
    pub euler_cfl: f64,
    pub seed: u64,
    pub random_states: usize,
    pub perturbation: f64,
    pub sweep_z: Vec<f64>,
    pub sweep_t: Vec<f64>,
    pub sweep_theta0: Vec<f64>,
    pub bose_z_cap: f64,
    pub classical_theta0: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::defaults(ExperimentKind::Sod)
    }
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            gas: Statistics::Bose,
            theta0: 0.01,
            epsilon: 1e-6,
            epsilons: vec![1e-1, 1e-2, 1e-3],
            cfl: 0.5,
            mu_rule: MuKind::RhoScaled,
            mu: 2.0,
            tableau: "rk2".into(),
            scheme: TransportScheme::Weno3,
            t_final: 0.2,
            fixed_step: None,
            snapshot_every: 0,
            n_x: 200,
            levels: vec![40, 80, 160],
            n_v: 32,
            velocity_half_width: None,
            n_sigma: 16,
            c_gamma: 1.0 / (2.0 * std::f64::consts::PI),
            vhs_gamma: 0.0,
            x_lo: -1.0,
            x_hi: 1.0,
            interface: 0.0,
            boundary: Boundary::Outflow,
            rho_left: 1.0,
            t_left: 1.0,
            rho_right: 0.125,
            t_right: 0.25,
            delta_x: 0.25,
            delta_y: 0.25,
            rho0_mean: 0.3125,
            rho0_amplitude: 0.1875,
            e0_mean: 0.625,
            e0_amplitude: 0.375,
            euler_threshold: 1e-4,
            euler_cfl: 0.4,
            seed: 2024,
            random_states: 50,
            perturbation: 0.3,
            sweep_z: vec![0.05, 0.3, 0.7, 0.99, 0.999, 3.0],
            sweep_t: vec![0.5, 1.0, 2.0],
            sweep_theta0: vec![1.0, 9.0],
            bose_z_cap: 0.99,
            classical_theta0: 1e-10,
        };
        match kind {
            ExperimentKind::Sod => base,
            ExperimentKind::Convergence => Self {
                theta0: 1.0,
                epsilon: 1.0,
                t_final: 0.1,
                x_lo: 0.0,
                x_hi: 1.0,
                boundary: Boundary::Periodic,
                ..base
            },
            ExperimentKind::ApDecay => Self {
                theta0: 1.0,
                n_x: 50,
                t_final: 0.05,
                ..base
            },
            ExperimentKind::EquilibriumCheck => Self {
                theta0: 1.0,
                ..base
            },
        }
    }

    /// Defaults for `kind`, overlaid by an optional TOML file and then by
    /// `key=value` strings whose values are parsed as TOML (bare words fall
    /// back to strings).
    pub fn load(kind: ExperimentKind, file: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut table = toml::Table::try_from(Self::defaults(kind))
            .map_err(|e| Error::Config(format!("serializing defaults: {e}")))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            let file_table: toml::Table = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            for (k, v) in file_table {
                table.insert(k, v);
            }
        }
        for set in sets {
            let (key, raw) = set
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{set}` is not key=value")))?;
            table.insert(key.trim().to_string(), parse_value(raw.trim()));
        }
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        if cfg.experiment != kind {
            return Err(Error::Config(format!(
                "configuration is for {}, not {}",
                cfg.experiment.name(),
                kind.name()
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.gas_statistics()?;
        self.solver_config()?.validate()?;
        if self.n_v < 4 {
            return Err(Error::Config(format!("n_v = {} is too small", self.n_v)));
        }
        if !(self.x_hi > self.x_lo) {
            return Err(Error::Config("x_hi must exceed x_lo".into()));
        }
        if self.experiment == ExperimentKind::Convergence {
            if self.levels.len() < 3 {
                return Err(Error::Config(
                    "the refinement study needs at least 3 levels".into(),
                ));
            }
            if self.levels.windows(2).any(|w| w[1] != 2 * w[0]) {
                return Err(Error::Config(format!(
                    "levels {:?} must double",
                    self.levels
                )));
            }
        }
        if self.experiment == ExperimentKind::ApDecay && self.epsilons.is_empty() {
            return Err(Error::Config("no epsilons given".into()));
        }
        Ok(())
    }

    pub fn gas_statistics(&self) -> Result<GasStatistics> {
        GasStatistics::new(self.gas, self.theta0, 2)
    }

    pub fn kernel(&self) -> CollisionKernelConfig {
        CollisionKernelConfig {
            gamma: self.vhs_gamma,
            c_gamma: self.c_gamma,
            n_sigma: self.n_sigma,
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        Ok(SolverConfig {
            epsilon: self.epsilon,
            cfl: self.cfl,
            mu_rule: match self.mu_rule {
                MuKind::RhoScaled => MuRule::RhoScaled(self.mu),
                MuKind::Fixed => MuRule::Fixed(self.mu),
            },
            tableau: ButcherTableau::by_name(&self.tableau)?,
            scheme: self.scheme,
            t_final: self.t_final,
            fixed_step: self.fixed_step,
            snapshot_every: self.snapshot_every,
            kernel: self.kernel(),
        })
    }

    pub fn spatial_grid(&self, n_x: usize) -> Result<SpatialGrid> {
        SpatialGrid::new(n_x, self.x_lo, self.x_hi, self.boundary)
    }

    pub fn velocity_grid(&self, t_max: f64) -> Result<VelocityGrid> {
        let l = self
            .velocity_half_width
            .unwrap_or_else(|| VelocityGrid::default_half_width(t_max));
        VelocityGrid::new(self.n_v, l)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "theta0 = 9.0\nn_x = 64\ngas = \"fermi\"\n").unwrap();
        let cfg = ExperimentConfig::load(
            ExperimentKind::Sod,
            Some(&path),
            &["n_x=32".into(), "tableau=rk3".into(), "scheme=lw".into()],
        )
        .unwrap();
        assert_eq!(cfg.theta0, 9.0);
        assert_eq!(cfg.n_x, 32);
        assert_eq!(cfg.gas, Statistics::Fermi);
        assert_eq!(cfg.tableau, "rk3");
        assert_eq!(cfg.scheme, TransportScheme::LaxWendroffVanLeer);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        let k = ExperimentKind::Convergence;
        for set in [
            "nonsense=1",
            "cfl=2.0",
            "levels=[40, 80]",
            "tableau=rk4",
            "n_x",
        ] {
            let r = ExperimentConfig::load(k, None, &[set.into()]);
            assert!(matches!(r, Err(Error::Config(_))), "{set}: {r:?}");
        }
    }

    #[test]
    fn per_experiment_defaults() {
        let c = ExperimentConfig::defaults(ExperimentKind::Convergence);
        assert_eq!(c.boundary, Boundary::Periodic);
        assert_eq!(c.t_final, 0.1);
        let s = ExperimentConfig::defaults(ExperimentKind::Sod);
        assert_eq!((s.x_lo, s.x_hi, s.t_final), (-1.0, 1.0, 0.2));
    }
}
