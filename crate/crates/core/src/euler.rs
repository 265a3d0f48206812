//! Reference solver for the limiting Euler system. With p = (2/d)ρe the
//! system is the classical one with adiabatic index (d+2)/d.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Boundary, SpatialGrid};
use crate::phase_space::{primitive_from_conserved, Conserved};
use crate::statistics::{EquilibriumParams, GasStatistics};

const GHOSTS: usize = 2;

/// Primitive state (ρ, u_x, u_y, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: [f64; 2],
    pub p: f64,
}

/// Conserved variables (ρ, ρu_x, ρu_y, E) per cell, E = ρe + ½ρ|u|².
#[derive(Debug, Clone, PartialEq)]
pub struct EulerField {
    pub cells: Vec<Conserved>,
    pub dim: usize,
}

impl EulerField {
    pub fn new(cells: Vec<Conserved>, dim: usize) -> Result<Self> {
        let field = Self { cells, dim };
        field.check_positivity()?;
        Ok(field)
    }

    /// Adiabatic index (d+2)/d.
    #[inline]
    pub fn gamma(&self) -> f64 {
        (self.dim as f64 + 2.0) / self.dim as f64
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// (ρ, u, e) per cell.
    pub fn primitives(&self) -> Result<Vec<(f64, [f64; 2], f64)>> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, m)| primitive_from_conserved(m).map_err(|e| e.in_cell(i)))
            .collect()
    }

    pub fn check_positivity(&self) -> Result<()> {
        for (i, m) in self.cells.iter().enumerate() {
            let internal = m[3] - 0.5 * (m[1] * m[1] + m[2] * m[2]) / m[0];
            if !(m[0] > 0.0) || !(internal > 0.0) {
                return Err(Error::Positivity {
                    cell: i,
                    detail: format!("rho = {}, rho e = {internal}", m[0]),
                });
            }
        }
        Ok(())
    }

    pub fn totals(&self, dx: f64) -> Conserved {
        let mut t = [0.0; 4];
        for m in &self.cells {
            for a in 0..4 {
                t[a] += m[a] * dx;
            }
        }
        t
    }

    /// Largest |u_x| + c.
    pub fn max_signal_speed(&self) -> f64 {
        let g = self.gamma();
        self.cells
            .iter()
            .map(|m| {
                let w = to_primitive(m, g);
                w.u[0].abs() + (g * w.p / w.rho).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

#[inline]
fn to_primitive(m: &Conserved, gamma: f64) -> Primitive {
    let rho = m[0];
    let u = [m[1] / rho, m[2] / rho];
    let p = (gamma - 1.0) * (m[3] - 0.5 * rho * (u[0] * u[0] + u[1] * u[1]));
    Primitive { rho, u, p }
}

#[inline]
fn to_conserved(w: &Primitive, gamma: f64) -> Conserved {
    let [ux, uy] = w.u;
    [
        w.rho,
        w.rho * ux,
        w.rho * uy,
        w.p / (gamma - 1.0) + 0.5 * w.rho * (ux * ux + uy * uy),
    ]
}

#[inline]
fn physical_flux(w: &Primitive, m: &Conserved) -> Conserved {
    let ux = w.u[0];
    [m[1], m[1] * ux + w.p, m[2] * ux, (m[3] + w.p) * ux]
}

#[inline]
fn van_leer(a: f64, b: f64) -> f64 {
    if a * b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

fn hll(wl: &Primitive, wr: &Primitive, gamma: f64) -> Conserved {
    let ml = to_conserved(wl, gamma);
    let mr = to_conserved(wr, gamma);
    let cl = (gamma * wl.p / wl.rho).sqrt();
    let cr = (gamma * wr.p / wr.rho).sqrt();
    let sl = (wl.u[0] - cl).min(wr.u[0] - cr);
    let sr = (wl.u[0] + cl).max(wr.u[0] + cr);
    let fl = physical_flux(wl, &ml);
    let fr = physical_flux(wr, &mr);
    if sl >= 0.0 {
        fl
    } else if sr <= 0.0 {
        fr
    } else {
        let mut f = [0.0; 4];
        for a in 0..4 {
            f[a] = (sr * fl[a] - sl * fr[a] + sl * sr * (mr[a] - ml[a])) / (sr - sl);
        }
        f
    }
}

fn padded(field: &EulerField, bc: Boundary) -> Vec<Primitive> {
    let n = field.len();
    let g = field.gamma();
    let w: Vec<Primitive> = field.cells.iter().map(|m| to_primitive(m, g)).collect();
    let mut out = Vec::with_capacity(n + 2 * GHOSTS);
    for k in 0..GHOSTS {
        out.push(match bc {
            Boundary::Periodic => w[n - GHOSTS + k],
            Boundary::Outflow => w[0],
        });
    }
    out.extend_from_slice(&w);
    for k in 0..GHOSTS {
        out.push(match bc {
            Boundary::Periodic => w[k],
            Boundary::Outflow => w[n - 1],
        });
    }
    out
}

/// -∂ₓF with MUSCL reconstruction of the primitives and HLL fluxes.
fn rhs(field: &EulerField, sgrid: &SpatialGrid) -> Vec<Conserved> {
    let n = field.len();
    let g = field.gamma();
    let w = padded(field, sgrid.bc);
    let limited = |k: usize| -> (Primitive, Primitive) {
        let (a, b, c) = (&w[k - 1], &w[k], &w[k + 1]);
        let slope = |x: f64, y: f64, z: f64| 0.5 * van_leer(y - x, z - y);
        let s = [
            slope(a.rho, b.rho, c.rho),
            slope(a.u[0], b.u[0], c.u[0]),
            slope(a.u[1], b.u[1], c.u[1]),
            slope(a.p, b.p, c.p),
        ];
        (
            Primitive {
                rho: b.rho - s[0],
                u: [b.u[0] - s[1], b.u[1] - s[2]],
                p: b.p - s[3],
            },
            Primitive {
                rho: b.rho + s[0],
                u: [b.u[0] + s[1], b.u[1] + s[2]],
                p: b.p + s[3],
            },
        )
    };
    // Interface k sits between padded cells k and k+1, k = 1..=n+1.
    let faces: Vec<Conserved> = (GHOSTS - 1..GHOSTS + n)
        .into_par_iter()
        .map(|k| {
            let (_, left) = limited(k);
            let (right, _) = limited(k + 1);
            hll(&left, &right, g)
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut r = [0.0; 4];
            for a in 0..4 {
                r[a] = -(faces[i + 1][a] - faces[i][a]) / sgrid.dx;
            }
            r
        })
        .collect()
}

fn axpy(base: &[Conserved], h: f64, d: &[Conserved]) -> Vec<Conserved> {
    base.iter()
        .zip(d)
        .map(|(m, r)| {
            [
                m[0] + h * r[0],
                m[1] + h * r[1],
                m[2] + h * r[2],
                m[3] + h * r[3],
            ]
        })
        .collect()
}

/// One SSP-RK2 step of the MUSCL/HLL scheme.
pub fn euler_step(field: &EulerField, sgrid: &SpatialGrid, h: f64) -> Result<EulerField> {
    if field.len() != sgrid.n_x {
        return Err(Error::GridMismatch(format!(
            "{} Euler cells on a grid of {}",
            field.len(),
            sgrid.n_x
        )));
    }
    let k1 = rhs(field, sgrid);
    let stage = EulerField {
        cells: axpy(&field.cells, h, &k1),
        dim: field.dim,
    };
    stage.check_positivity()?;
    let k2 = rhs(&stage, sgrid);
    let mid = axpy(&stage.cells, h, &k2);
    let cells = field
        .cells
        .iter()
        .zip(&mid)
        .map(|(a, b)| {
            [
                0.5 * (a[0] + b[0]),
                0.5 * (a[1] + b[1]),
                0.5 * (a[2] + b[2]),
                0.5 * (a[3] + b[3]),
            ]
        })
        .collect();
    EulerField::new(cells, field.dim)
}

/// Marches to `t_final` with h = cfl Δx / max(|u|+c), the last step shortened.
pub fn run_euler(
    field: &EulerField,
    sgrid: &SpatialGrid,
    t_final: f64,
    cfl: f64,
) -> Result<EulerField> {
    let mut f = field.clone();
    let mut t = 0.0;
    while t_final - t > 1e-14 * t_final.max(1.0) {
        let speed = f.max_signal_speed();
        let h = (cfl * sgrid.dx / speed).min(t_final - t);
        f = euler_step(&f, sgrid, h)?;
        t += h;
    }
    Ok(f)
}

fn shock_or_rarefaction(p: f64, w: &Primitive, gamma: f64) -> (f64, f64) {
    let c = (gamma * w.p / w.rho).sqrt();
    if p > w.p {
        let a = 2.0 / ((gamma + 1.0) * w.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * w.p;
        let q = (a / (p + b)).sqrt();
        ((p - w.p) * q, q * (1.0 - 0.5 * (p - w.p) / (p + b)))
    } else {
        let e = (gamma - 1.0) / (2.0 * gamma);
        let r = (p / w.p).powf(e);
        (
            2.0 * c / (gamma - 1.0) * (r - 1.0),
            r / (w.rho * c) * (w.p / p),
        )
    }
}

/// Star-region pressure and velocity of the Riemann problem.
pub fn star_state(left: &Primitive, right: &Primitive, gamma: f64) -> Result<(f64, f64)> {
    for w in [left, right] {
        if !(w.rho > 0.0 && w.p > 0.0) {
            return Err(Error::Domain(format!(
                "Riemann state {w:?} is not positive"
            )));
        }
    }
    let cl = (gamma * left.p / left.rho).sqrt();
    let cr = (gamma * right.p / right.rho).sqrt();
    let du = right.u[0] - left.u[0];
    if 2.0 / (gamma - 1.0) * (cl + cr) <= du {
        return Err(Error::Vacuum);
    }
    // Two-rarefaction guess.
    let e = (gamma - 1.0) / (2.0 * gamma);
    let mut p = ((cl + cr - 0.5 * (gamma - 1.0) * du)
        / (cl / left.p.powf(e) + cr / right.p.powf(e)))
    .powf(1.0 / e)
    .max(1e-12 * left.p.min(right.p));
    for _ in 0..100 {
        let (fl, dl) = shock_or_rarefaction(p, left, gamma);
        let (fr, dr) = shock_or_rarefaction(p, right, gamma);
        let next = (p - (fl + fr + du) / (dl + dr)).max(1e-14 * p);
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < 1e-12 {
            let (fl, _) = shock_or_rarefaction(p, left, gamma);
            let (fr, _) = shock_or_rarefaction(p, right, gamma);
            let u = 0.5 * (left.u[0] + right.u[0]) + 0.5 * (fr - fl);
            return Ok((p, u));
        }
    }
    Err(Error::Convergence {
        what: "exact Riemann pressure",
        iterations: 100,
    })
}

/// Samples the exact self-similar solution at the given ξ = x/t. The
/// transverse velocity is carried passively by the contact.
pub fn exact_riemann(
    left: &Primitive,
    right: &Primitive,
    gamma: f64,
    xi: &[f64],
) -> Result<Vec<Primitive>> {
    let (ps, us) = star_state(left, right, gamma)?;
    let g1 = (gamma - 1.0) / (gamma + 1.0);
    let sample = |s: f64| -> Primitive {
        let (w, sign) = if s <= us { (left, -1.0) } else { (right, 1.0) };
        let c = (gamma * w.p / w.rho).sqrt();
        // Work in the frame where the wave moves in the +sign direction.
        let un = w.u[0];
        if ps > w.p {
            let shock = un
                + sign
                    * c
                    * ((gamma + 1.0) / (2.0 * gamma) * ps / w.p + (gamma - 1.0) / (2.0 * gamma))
                        .sqrt();
            if sign * (s - shock) >= 0.0 {
                *w
            } else {
                let rho = w.rho * (ps / w.p + g1) / (g1 * ps / w.p + 1.0);
                Primitive {
                    rho,
                    u: [us, w.u[1]],
                    p: ps,
                }
            }
        } else {
            let head = un + sign * c;
            let cs = c * (ps / w.p).powf((gamma - 1.0) / (2.0 * gamma));
            let tail = us + sign * cs;
            if sign * (s - head) >= 0.0 {
                *w
            } else if sign * (s - tail) <= 0.0 {
                let rho = w.rho * (ps / w.p).powf(1.0 / gamma);
                Primitive {
                    rho,
                    u: [us, w.u[1]],
                    p: ps,
                }
            } else {
                let u = 2.0 / (gamma + 1.0) * (-sign * c + (gamma - 1.0) / 2.0 * un + s);
                let cf = 2.0 / (gamma + 1.0) * (c - sign * (gamma - 1.0) / 2.0 * (un - s));
                let rho = w.rho * (cf / c).powf(2.0 / (gamma - 1.0));
                let p = w.p * (cf / c).powf(2.0 * gamma / (gamma - 1.0));
                Primitive {
                    rho,
                    u: [u, w.u[1]],
                    p,
                }
            }
        }
    };
    Ok(xi.iter().map(|&s| sample(s)).collect())
}

/// Cell averages of the exact solution from `sub` midpoint samples per cell.
pub fn exact_riemann_averages(
    left: &Primitive,
    right: &Primitive,
    gamma: f64,
    sgrid: &SpatialGrid,
    x0: f64,
    t: f64,
    sub: usize,
) -> Result<Vec<Conserved>> {
    let sub = sub.max(1);
    let mut xi = Vec::with_capacity(sgrid.n_x * sub);
    for i in 0..sgrid.n_x {
        let lo = sgrid.center(i) - 0.5 * sgrid.dx;
        for k in 0..sub {
            let x = lo + (k as f64 + 0.5) * sgrid.dx / sub as f64;
            xi.push((x - x0) / t.max(f64::MIN_POSITIVE));
        }
    }
    let samples = exact_riemann(left, right, gamma, &xi)?;
    Ok(samples
        .chunks(sub)
        .map(|c| {
            let mut m = [0.0; 4];
            for w in c {
                let q = to_conserved(w, gamma);
                for a in 0..4 {
                    m[a] += q[a] / sub as f64;
                }
            }
            m
        })
        .collect())
}

impl Primitive {
    pub fn conserved(&self, gamma: f64) -> Conserved {
        to_conserved(self, gamma)
    }

    pub fn from_conserved(m: &Conserved, gamma: f64) -> Self {
        to_primitive(m, gamma)
    }
}

/// Per-cell (z, T) from (ρ, e).
pub fn recover_fugacity_field(
    field: &EulerField,
    gas: &GasStatistics,
) -> Result<Vec<EquilibriumParams>> {
    field
        .primitives()?
        .par_iter()
        .enumerate()
        .map(|(i, &(rho, _, e))| gas.invert_moments(rho, e).map_err(|err| err.in_cell(i)))
        .collect()
}

/// Writes x, rho, ux, uy, e, z, T.
pub fn write_euler_csv(
    path: &Path,
    field: &EulerField,
    sgrid: &SpatialGrid,
    gas: &GasStatistics,
) -> Result<()> {
    let prims = field.primitives()?;
    let params = recover_fugacity_field(field, gas)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,rho,ux,uy,e,z,T")?;
    for (i, ((rho, u, e), p)) in prims.iter().zip(&params).enumerate() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            sgrid.center(i),
            rho,
            u[0],
            u[1],
            e,
            p.z,
            p.t
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prim(rho: f64, u: f64, p: f64) -> Primitive {
        Primitive {
            rho,
            u: [u, 0.0],
            p,
        }
    }

    #[test]
    fn classic_sod_star_state() {
        // Toro's test 1 for γ = 1.4.
        let (p, u) = star_state(&prim(1.0, 0.0, 1.0), &prim(0.125, 0.0, 0.1), 1.4).unwrap();
        assert!((p - 0.30313).abs() < 1e-5, "{p}");
        assert!((u - 0.92745).abs() < 1e-5, "{u}");
    }

    #[test]
    fn exact_solution_satisfies_rankine_hugoniot() {
        let g = 2.0;
        let (l, r) = (prim(1.0, 0.0, 1.0), prim(0.125, 0.0, 0.03125));
        let (ps, us) = star_state(&l, &r, g).unwrap();
        let rho_star = exact_riemann(&l, &r, g, &[us + 1e-9]).unwrap()[0].rho;
        // Shock speed from mass conservation must match momentum conservation.
        let s = rho_star * us / (rho_star - r.rho);
        let momentum = rho_star * us * (us - s) + ps - r.p;
        assert!(momentum.abs() < 1e-9, "{momentum}");
        // Left rarefaction keeps the isentrope.
        let rho_l_star = exact_riemann(&l, &r, g, &[us - 1e-9]).unwrap()[0].rho;
        assert!((ps / rho_l_star.powf(g) - l.p / l.rho.powf(g)).abs() < 1e-12);
    }

    #[test]
    fn identical_and_symmetric_states() {
        let w = prim(0.7, 0.2, 0.4);
        for s in exact_riemann(&w, &w, 2.0, &[-3.0, 0.0, 0.5, 3.0]).unwrap() {
            assert!(
                (s.rho - 0.7).abs() < 1e-12
                    && (s.u[0] - 0.2).abs() < 1e-12
                    && (s.p - 0.4).abs() < 1e-10
            );
        }
        let (p, u) = star_state(&prim(1.0, 0.5, 1.0), &prim(1.0, -0.5, 1.0), 2.0).unwrap();
        assert!(u.abs() < 1e-14 && p > 1.0);
        assert!(matches!(
            star_state(&prim(1.0, -10.0, 1.0), &prim(1.0, 10.0, 1.0), 2.0),
            Err(Error::Vacuum)
        ));
    }

    #[test]
    fn uniform_and_contact_states_are_preserved() {
        let g = 2.0;
        let sgrid = SpatialGrid::new(20, 0.0, 1.0, Boundary::Periodic).unwrap();
        let cells: Vec<Conserved> = (0..20)
            .map(|i| to_conserved(&prim(if i < 10 { 1.0 } else { 0.3 }, 0.4, 0.8), g))
            .collect();
        let field = EulerField::new(cells, 2).unwrap();
        let next = euler_step(&field, &sgrid, 0.01).unwrap();
        for m in &next.cells {
            let w = to_primitive(m, g);
            assert!(
                (w.u[0] - 0.4).abs() < 1e-13 && (w.p - 0.8).abs() < 1e-13,
                "{w:?}"
            );
        }
        let before = field.totals(sgrid.dx);
        let after = next.totals(sgrid.dx);
        for a in 0..4 {
            assert!((before[a] - after[a]).abs() < 1e-14);
        }
    }
}
