//! Phase-space storage f[i][j] (spatial cell i, velocity node j) and
//! snapshot files.
//!
//! Binary snapshot layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `QBZSNAP1` |
//! | 8     | n_x (u64) |
//! | 8     | n_per_dim (u64) |
//! | 8     | velocity half-width L (f64) |
//! | 8     | x_lo (f64) |
//! | 8     | x_hi (f64) |
//! | 8     | theta0 (f64) |
//! | 8     | kind (u64, 0 = Bose, 1 = Fermi) |
//! | 8·n_x·n_per_dim² | f values, cell-major, node index iy·n + ix |
//!
//! The CSV form starts with one `# key=value` comment line per header field
//! followed by the columns `cell,x,vx,vy,f` in the same order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, VelocityGrid};
use crate::statistics::Statistics;

const MAGIC: &[u8; 8] = b"QBZSNAP1";

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    n_x: usize,
    n_v: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(n_x: usize, n_v: usize) -> Self {
        Self {
            n_x,
            n_v,
            data: vec![0.0; n_x * n_v],
        }
    }

    pub fn from_vec(n_x: usize, n_v: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_x * n_v {
            return Err(Error::GridMismatch(format!(
                "{} values for {n_x} cells x {n_v} nodes",
                data.len()
            )));
        }
        Ok(Self { n_x, n_v, data })
    }

    /// Builds each cell from a closure on the cell index.
    pub fn from_cells(
        n_x: usize,
        n_v: usize,
        mut cell: impl FnMut(usize) -> Result<Vec<f64>>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(n_x * n_v);
        for i in 0..n_x {
            let values = cell(i)?;
            if values.len() != n_v {
                return Err(Error::GridMismatch(format!(
                    "cell {i} has {} nodes, expected {n_v}",
                    values.len()
                )));
            }
            data.extend_from_slice(&values);
        }
        Ok(Self { n_x, n_v, data })
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Velocity nodes per cell.
    #[inline]
    pub fn n_v(&self) -> usize {
        self.n_v
    }

    #[inline]
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_v..(i + 1) * self.n_v]
    }

    #[inline]
    pub fn cell_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_v..(i + 1) * self.n_v]
    }

    pub fn cells(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n_v)
    }

    pub fn par_cells(&self) -> rayon::slice::ChunksExact<'_, f64> {
        self.data.par_chunks_exact(self.n_v)
    }

    pub fn par_cells_mut(&mut self) -> rayon::slice::ChunksExactMut<'_, f64> {
        self.data.par_chunks_exact_mut(self.n_v)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn check_shape(&self, n_x: usize, n_v: usize) -> Result<()> {
        if self.n_x != n_x || self.n_v != n_v {
            return Err(Error::GridMismatch(format!(
                "field is {}x{}, grids are {n_x}x{n_v}",
                self.n_x, self.n_v
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Metadata stored with a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n_x: usize,
    pub n_per_dim: usize,
    pub half_width: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub theta0: f64,
    pub kind: Statistics,
}

impl SnapshotHeader {
    pub fn new(sgrid: &SpatialGrid, vgrid: &VelocityGrid, theta0: f64, kind: Statistics) -> Self {
        Self {
            n_x: sgrid.n_x,
            n_per_dim: vgrid.n_per_dim(),
            half_width: vgrid.half_width(),
            x_lo: sgrid.x_lo,
            x_hi: sgrid.x_hi,
            theta0,
            kind,
        }
    }

    fn nodes(&self) -> usize {
        self.n_per_dim * self.n_per_dim
    }
}

pub fn write_snapshot_binary(
    path: &Path,
    header: &SnapshotHeader,
    f: &DistributionField,
) -> Result<()> {
    f.check_shape(header.n_x, header.nodes())?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header.n_x as u64).to_le_bytes())?;
    w.write_all(&(header.n_per_dim as u64).to_le_bytes())?;
    for v in [header.half_width, header.x_lo, header.x_hi, header.theta0] {
        w.write_all(&v.to_le_bytes())?;
    }
    let kind: u64 = match header.kind {
        Statistics::Bose => 0,
        Statistics::Fermi => 1,
    };
    w.write_all(&kind.to_le_bytes())?;
    for v in f.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_binary(path: &Path) -> Result<(SnapshotHeader, DistributionField)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    if &word != MAGIC {
        return Err(Error::Config(format!(
            "{} is not a snapshot file",
            path.display()
        )));
    }
    let mut next = || -> Result<[u8; 8]> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(b)
    };
    let n_x = u64::from_le_bytes(next()?) as usize;
    let n_per_dim = u64::from_le_bytes(next()?) as usize;
    let half_width = f64::from_le_bytes(next()?);
    let x_lo = f64::from_le_bytes(next()?);
    let x_hi = f64::from_le_bytes(next()?);
    let theta0 = f64::from_le_bytes(next()?);
    let kind = match u64::from_le_bytes(next()?) {
        0 => Statistics::Bose,
        1 => Statistics::Fermi,
        k => return Err(Error::Config(format!("unknown statistics tag {k}"))),
    };
    let header = SnapshotHeader {
        n_x,
        n_per_dim,
        half_width,
        x_lo,
        x_hi,
        theta0,
        kind,
    };
    let count = n_x
        .checked_mul(header.nodes())
        .ok_or_else(|| Error::Config("snapshot dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        data.push(f64::from_le_bytes(next()?));
    }
    Ok((
        header,
        DistributionField::from_vec(n_x, header.nodes(), data)?,
    ))
}

pub fn write_snapshot_csv(
    path: &Path,
    header: &SnapshotHeader,
    f: &DistributionField,
) -> Result<()> {
    f.check_shape(header.n_x, header.nodes())?;
    let vgrid = VelocityGrid::new(header.n_per_dim, header.half_width)?;
    let dx = (header.x_hi - header.x_lo) / header.n_x as f64;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# n_x={}", header.n_x)?;
    writeln!(w, "# n_per_dim={}", header.n_per_dim)?;
    writeln!(w, "# half_width={:.16e}", header.half_width)?;
    writeln!(w, "# x_lo={:.16e}", header.x_lo)?;
    writeln!(w, "# x_hi={:.16e}", header.x_hi)?;
    writeln!(w, "# theta0={:.16e}", header.theta0)?;
    writeln!(w, "# kind={}", header.kind.name())?;
    writeln!(w, "cell,x,vx,vy,f")?;
    for (i, cell) in f.cells().enumerate() {
        let x = header.x_lo + (i as f64 + 0.5) * dx;
        for (j, value) in cell.iter().enumerate() {
            let [vx, vy] = vgrid.velocity(j);
            writeln!(w, "{i},{x:.16e},{vx:.16e},{vy:.16e},{value:.16e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_csv(path: &Path) -> Result<(SnapshotHeader, DistributionField)> {
    let r = BufReader::new(File::open(path)?);
    let mut fields = std::collections::HashMap::new();
    let mut values = Vec::new();
    let bad = |what: &str| Error::Config(format!("snapshot csv: {what}"));
    for line in r.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                fields.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if line.starts_with("cell") || line.is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().ok_or_else(|| bad("empty row"))?;
        values.push(last.parse::<f64>().map_err(|_| bad("bad value"))?);
    }
    let get = |k: &str| fields.get(k).ok_or_else(|| bad(&format!("missing {k}")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| bad(k)) };
    let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(k)) };
    let kind = match get("kind")?.as_str() {
        "bose" => Statistics::Bose,
        "fermi" => Statistics::Fermi,
        other => return Err(bad(&format!("unknown kind {other}"))),
    };
    let header = SnapshotHeader {
        n_x: int("n_x")?,
        n_per_dim: int("n_per_dim")?,
        half_width: num("half_width")?,
        x_lo: num("x_lo")?,
        x_hi: num("x_hi")?,
        theta0: num("theta0")?,
        kind,
    };
    let field = DistributionField::from_vec(header.n_x, header.nodes(), values)?;
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn sample() -> (SnapshotHeader, DistributionField) {
        let s = SpatialGrid::new(4, -1.0, 1.0, Boundary::Outflow).unwrap();
        let v = VelocityGrid::new(4, 2.0).unwrap();
        let data = (0..64).map(|k| (k as f64 * 0.37).sin() / 3.0).collect();
        let f = DistributionField::from_vec(4, 16, data).unwrap();
        (SnapshotHeader::new(&s, &v, 0.01, Statistics::Fermi), f)
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let (h, f) = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        write_snapshot_binary(&p, &h, &f).unwrap();
        let (h2, f2) = read_snapshot_binary(&p).unwrap();
        assert_eq!(h, h2);
        assert_eq!(f, f2);
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let (h, f) = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_snapshot_csv(&p, &h, &f).unwrap();
        let (h2, f2) = read_snapshot_csv(&p).unwrap();
        assert_eq!(h, h2);
        assert_eq!(f, f2);
    }

    #[test]
    fn shape_checks() {
        assert!(DistributionField::from_vec(2, 3, vec![0.0; 5]).is_err());
        let f = DistributionField::zeros(2, 3);
        assert!(f.check_shape(2, 4).is_err());
        assert_eq!(f.cell(1).len(), 3);
    }
}
