//! Upwind discretizations of v_x ∂ₓf in one space dimension and the moment
//! fluxes derived from them.
//!
//! Each velocity node is an independent linear advection problem with
//! constant speed v_x, so the upwind side is fixed per node. Fluxes live on
//! the n_x + 1 interfaces; two ghost cells per side supply the stencils.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::{Boundary, SpatialGrid, VelocityGrid};
use crate::phase_space::{Conserved, MacroRates, MacroState};

const GHOSTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportScheme {
    /// Second-order limited upwind flux (van Leer limiter).
    #[serde(alias = "lw_vanleer", alias = "lw")]
    LaxWendroffVanLeer,
    /// Third-order WENO with Jiang-Shu weights.
    Weno3,
}

impl TransportScheme {
    pub fn name(self) -> &'static str {
        match self {
            TransportScheme::LaxWendroffVanLeer => "lw_vanleer",
            TransportScheme::Weno3 => "weno3",
        }
    }

    fn min_cells(self) -> usize {
        match self {
            TransportScheme::LaxWendroffVanLeer => 3,
            TransportScheme::Weno3 => 5,
        }
    }
}

/// Per-node fluxes through the two ends of the domain, used to account for
/// mass, momentum and energy leaving through outflow boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BoundaryFlux {
    pub fn zeros(n_v: usize) -> Self {
        Self {
            left: vec![0.0; n_v],
            right: vec![0.0; n_v],
        }
    }

    /// Rate of change of the domain totals Σᵢ m_i Δx due to the boundaries.
    pub fn moment_rate(&self, vgrid: &VelocityGrid) -> Conserved {
        let w = vgrid.cell_volume();
        let mut m = [0.0; 4];
        for (j, [vx, vy]) in vgrid.velocities().enumerate() {
            let net = self.left[j] - self.right[j];
            m[0] += net * w;
            m[1] += vx * net * w;
            m[2] += vy * net * w;
            m[3] += 0.5 * (vx * vx + vy * vy) * net * w;
        }
        m
    }
}

#[inline]
fn van_leer(r: f64) -> f64 {
    (r + r.abs()) / (1.0 + r.abs())
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() < 1e-300 {
        0.0
    } else {
        num / den
    }
}

/// Upwind-side value at an interface from the upwind cell `c`, the one
/// behind it `b` and the downwind cell `d`.
#[inline]
fn limited_face(b: f64, c: f64, d: f64) -> f64 {
    c + 0.5 * van_leer(ratio(c - b, d - c)) * (d - c)
}

#[inline]
fn weno3_face(b: f64, c: f64, d: f64, eps: f64) -> f64 {
    let p0 = -0.5 * b + 1.5 * c;
    let p1 = 0.5 * c + 0.5 * d;
    let beta0 = (c - b) * (c - b);
    let beta1 = (d - c) * (d - c);
    let a0 = (1.0 / 3.0) / ((eps + beta0) * (eps + beta0));
    let a1 = (2.0 / 3.0) / ((eps + beta1) * (eps + beta1));
    (a0 * p0 + a1 * p1) / (a0 + a1)
}

/// Advects one column g (ghosts included) with speed `v`, writing
/// -v ∂ₓf into `rhs` and returning the two boundary fluxes.
fn advect_column(
    g: &[f64],
    v: f64,
    dx: f64,
    scheme: TransportScheme,
    rhs: &mut [f64],
) -> (f64, f64) {
    let n = rhs.len();
    let eps = match scheme {
        TransportScheme::Weno3 => {
            let (lo, hi) = g
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                });
            let range = hi - lo;
            // Scale-free regularization of size O(Δx²) relative to the data.
            dx * dx * range * range
        }
        TransportScheme::LaxWendroffVanLeer => 0.0,
    };
    let constant = eps == 0.0 && scheme == TransportScheme::Weno3;
    // Interface k sits between extended cells k + 1 and k + 2, i.e. between
    // physical cells k - 1 and k.
    let face = |k: usize| -> f64 {
        let (l, r) = (k + 1, k + 2);
        let value = if v >= 0.0 {
            let (b, c, d) = (g[l - 1], g[l], g[r]);
            match scheme {
                _ if constant => c,
                TransportScheme::Weno3 => weno3_face(b, c, d, eps),
                TransportScheme::LaxWendroffVanLeer => limited_face(b, c, d),
            }
        } else {
            let (b, c, d) = (g[r + 1], g[r], g[l]);
            match scheme {
                _ if constant => c,
                TransportScheme::Weno3 => weno3_face(b, c, d, eps),
                TransportScheme::LaxWendroffVanLeer => limited_face(b, c, d),
            }
        };
        v * value
    };
    let mut left = face(0);
    let first = left;
    for i in 0..n {
        let right = face(i + 1);
        rhs[i] = -(right - left) / dx;
        left = right;
    }
    (first, left)
}

fn fill_column(src: impl Iterator<Item = f64>, n: usize, bc: Boundary, g: &mut [f64]) {
    for (slot, value) in g[GHOSTS..GHOSTS + n].iter_mut().zip(src) {
        *slot = value;
    }
    match bc {
        Boundary::Periodic => {
            for k in 0..GHOSTS {
                g[k] = g[n + k];
                g[GHOSTS + n + k] = g[GHOSTS + k];
            }
        }
        Boundary::Outflow => {
            for k in 0..GHOSTS {
                g[k] = g[GHOSTS];
                g[GHOSTS + n + k] = g[GHOSTS + n - 1];
            }
        }
    }
}

/// -v_x ∂ₓf per velocity node. Also returns the interface fluxes at the two
/// ends of the domain.
pub fn transport_rhs_into(
    f: &DistributionField,
    scheme: TransportScheme,
    sgrid: &SpatialGrid,
    vgrid: &VelocityGrid,
    out: &mut DistributionField,
) -> Result<BoundaryFlux> {
    let n = sgrid.n_x;
    let nv = vgrid.len();
    f.check_shape(n, nv)?;
    out.check_shape(n, nv)?;
    if n < scheme.min_cells() {
        return Err(Error::GridMismatch(format!(
            "{} needs at least {} cells, got {n}",
            scheme.name(),
            scheme.min_cells()
        )));
    }
    let data = f.as_slice();
    let columns: Vec<(Vec<f64>, f64, f64)> = (0..nv)
        .into_par_iter()
        .map_init(
            || vec![0.0; n + 2 * GHOSTS],
            |g, j| {
                fill_column((0..n).map(|i| data[i * nv + j]), n, sgrid.bc, g);
                let mut rhs = vec![0.0; n];
                let (fl, fr) = advect_column(g, vgrid.vx(j), sgrid.dx, scheme, &mut rhs);
                (rhs, fl, fr)
            },
        )
        .collect();
    let mut boundary = BoundaryFlux::zeros(nv);
    let dst = out.as_mut_slice();
    for (j, (rhs, fl, fr)) in columns.into_iter().enumerate() {
        for (i, value) in rhs.into_iter().enumerate() {
            dst[i * nv + j] = value;
        }
        boundary.left[j] = fl;
        boundary.right[j] = fr;
    }
    Ok(boundary)
}

pub fn transport_rhs(
    f: &DistributionField,
    scheme: TransportScheme,
    sgrid: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<DistributionField> {
    let mut out = DistributionField::zeros(f.n_x(), f.n_v());
    transport_rhs_into(f, scheme, sgrid, vgrid, &mut out)?;
    Ok(out)
}

/// (F₁, F₂ₓ, F₂ᵧ, F₃) per cell as minus the velocity moments of an already
/// computed transport increment.
pub fn moment_fluxes_of(rhs: &DistributionField, vgrid: &VelocityGrid) -> Vec<Conserved> {
    rhs.cells()
        .map(|c| crate::phase_space::conserved_moments(c, vgrid).map(|m| -m))
        .collect()
}

/// Moment fluxes of the transport term, consistent with `transport_rhs`.
pub fn moment_fluxes(
    f: &DistributionField,
    scheme: TransportScheme,
    sgrid: &SpatialGrid,
    vgrid: &VelocityGrid,
) -> Result<Vec<Conserved>> {
    Ok(moment_fluxes_of(
        &transport_rhs(f, scheme, sgrid, vgrid)?,
        vgrid,
    ))
}

/// Time derivatives of (ρ, u, e) from the moment fluxes.
pub fn macro_derivatives(flux: &Conserved, state: &MacroState) -> Result<MacroRates> {
    if !(state.rho > 0.0) {
        return Err(Error::NonPositiveDensity(state.rho));
    }
    let [f1, f2x, f2y, f3] = *flux;
    let [ux, uy] = state.u;
    let inv_rho = 1.0 / state.rho;
    let du = [(-f2x + f1 * ux) * inv_rho, (-f2y + f1 * uy) * inv_rho];
    let u2 = ux * ux + uy * uy;
    let de = (-f3 + f1 * state.e + 0.5 * f1 * u2 + ux * (f2x - f1 * ux) + uy * (f2y - f1 * uy))
        * inv_rho;
    Ok(MacroRates {
        rho: -f1,
        u: du,
        e: de,
    })
}
