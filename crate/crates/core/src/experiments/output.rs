//! CSV and metadata writers shared by the experiments.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase_space::MacroState;

use super::config::ExperimentConfig;

/// One row of a spatial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    pub rho: f64,
    pub ux: f64,
    pub e: f64,
    pub z: f64,
    pub t: f64,
}

impl ProfileRow {
    pub fn new(x: f64, s: &MacroState) -> Self {
        Self {
            x,
            rho: s.rho,
            ux: s.u[0],
            e: s.e,
            z: s.z,
            t: s.t,
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_profile_csv(path: &Path, rows: &[ProfileRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,rho,ux,e,z,T")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.x, r.rho, r.ux, r.e, r.z, r.t
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `t,norm` pairs.
pub fn write_series_csv(path: &Path, series: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,norm")?;
    for (t, n) in series {
        writeln!(w, "{t:.16e},{n:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a, R: Serialize> {
    experiment: &'static str,
    version: &'static str,
    wall_time_seconds: f64,
    config: &'a ExperimentConfig,
    results: &'a R,
}

/// metadata.json: resolved configuration, crate version, wall time and results.
pub fn write_metadata<R: Serialize>(
    dir: &Path,
    cfg: &ExperimentConfig,
    wall: Duration,
    results: &R,
) -> Result<()> {
    let meta = Metadata {
        experiment: cfg.experiment.name(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: wall.as_secs_f64(),
        config: cfg,
        results,
    };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Config(format!("serializing metadata: {e}")))?;
    fs::write(dir.join("metadata.json"), text)?;
    Ok(())
}
