//! Uniform velocity and spatial grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell-centered tensor grid on [-L, L)², nodes v_i = -L + (i + ½)Δv.
/// Flat node index j = iy·n + ix (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    n: usize,
    half_width: f64,
    dv: f64,
    coords: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(n_per_dim: usize, half_width: f64) -> Result<Self> {
        if n_per_dim < 4 {
            return Err(Error::Config(format!(
                "n_v = {n_per_dim} must be at least 4"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Config(format!(
                "velocity half-width {half_width} must be positive"
            )));
        }
        let dv = 2.0 * half_width / n_per_dim as f64;
        let coords = (0..n_per_dim)
            .map(|i| -half_width + (i as f64 + 0.5) * dv)
            .collect();
        Ok(Self {
            n: n_per_dim,
            half_width,
            dv,
            coords,
        })
    }

    /// L = 8·max(1, √T_max).
    pub fn default_half_width(t_max: f64) -> f64 {
        8.0 * t_max.sqrt().max(1.0)
    }

    #[inline]
    pub fn n_per_dim(&self) -> usize {
        self.n
    }

    /// Total number of nodes, n².
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.dv
    }

    /// Δv², the quadrature weight of every node.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dv * self.dv
    }

    /// One-dimensional node coordinates.
    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    #[inline]
    pub fn velocity(&self, j: usize) -> [f64; 2] {
        [self.coords[j % self.n], self.coords[j / self.n]]
    }

    #[inline]
    pub fn vx(&self, j: usize) -> f64 {
        self.coords[j % self.n]
    }

    /// Largest transport speed |v_x| on the grid, taken as L.
    #[inline]
    pub fn max_speed(&self) -> f64 {
        self.half_width
    }

    pub fn velocities(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |j| self.velocity(j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells.
    Outflow,
}

/// Cell-centered 1D grid on [x_lo, x_hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub n_x: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
    pub bc: Boundary,
}

impl SpatialGrid {
    pub fn new(n_x: usize, x_lo: f64, x_hi: f64, bc: Boundary) -> Result<Self> {
        if n_x < 4 {
            return Err(Error::Config(format!("n_x = {n_x} must be at least 4")));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Config(format!(
                "bad spatial domain [{x_lo}, {x_hi}]"
            )));
        }
        Ok(Self {
            n_x,
            x_lo,
            x_hi,
            dx: (x_hi - x_lo) / n_x as f64,
            bc,
        })
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.center(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_symmetric_and_cell_centered() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coords()[0], -7.75);
        for i in 0..32 {
            assert_eq!(g.coords()[i], -g.coords()[31 - i]);
        }
        assert_eq!(g.velocity(g.index(3, 5)), [g.coords()[3], g.coords()[5]]);
        assert_eq!(g.len(), 1024);
    }

    #[test]
    fn default_half_width() {
        assert_eq!(VelocityGrid::default_half_width(0.25), 8.0);
        assert_eq!(VelocityGrid::default_half_width(4.0), 16.0);
    }

    #[test]
    fn spatial_grid() {
        let s = SpatialGrid::new(200, -1.0, 1.0, Boundary::Outflow).unwrap();
        assert!((s.dx - 0.01).abs() < 1e-15);
        assert!((s.center(0) + 0.995).abs() < 1e-15);
        assert!(SpatialGrid::new(3, 0.0, 1.0, Boundary::Periodic).is_err());
        assert!(VelocityGrid::new(32, -1.0).is_err());
    }
}
