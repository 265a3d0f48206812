//! Quantum collision operator on the velocity grid by direct quadrature over
//! the unit circle, with bilinear interpolation of the post-collision values
//! and exact conservation restored by projection.
//!
//! For a node pair (v, v_*) and direction σ the post-collision velocities are
//! v' = (v+v_*)/2 + |v-v_*|σ/2 and v'_* = (v+v_*)/2 - |v-v_*|σ/2. On a uniform
//! grid their offsets from v depend only on the index difference of the pair
//! and on σ, so one interpolation stencil serves every pair with that
//! difference. The integrand is symmetric under v ↔ v_* and σ ↔ -σ, which the
//! evaluation uses to visit half the differences and half the circle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::phase_space::MomentBasis;
use crate::statistics::GasStatistics;

/// Default cap on the stencil table, in bytes.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 30;

/// Interpolation fractions this close to 0 or 1 are snapped.
const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionKernelConfig {
    /// VHS exponent, 0 for Maxwell molecules.
    pub gamma: f64,
    pub c_gamma: f64,
    pub n_sigma: usize,
}

impl Default for CollisionKernelConfig {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            c_gamma: 1.0 / (2.0 * std::f64::consts::PI),
            n_sigma: 16,
        }
    }
}

impl CollisionKernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sigma < 4 || !self.n_sigma.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_sigma = {} must be even and at least 4",
                self.n_sigma
            )));
        }
        if !(self.c_gamma > 0.0) || !self.c_gamma.is_finite() {
            return Err(Error::Config(format!(
                "C_gamma = {} must be positive",
                self.c_gamma
            )));
        }
        if !self.gamma.is_finite() || self.gamma < -1.0 {
            return Err(Error::Config(format!(
                "gamma = {} out of range",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Unit vector σ_m.
    pub fn sigma(&self, m: usize) -> [f64; 2] {
        let angle = 2.0 * std::f64::consts::PI * m as f64 / self.n_sigma as f64;
        [angle.cos(), angle.sin()]
    }
}

/// Bilinear footprint of a post-collision point relative to node j, in the
/// zero-padded (n+1)×(n+1) layout.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Tap {
    ox: isize,
    oy: isize,
    w: [f64; 4],
}

impl Tap {
    fn new(dx: f64, dy: f64) -> Self {
        let (ox, fx) = split(dx);
        let (oy, fy) = split(dy);
        Tap {
            ox,
            oy,
            w: [
                (1.0 - fx) * (1.0 - fy),
                fx * (1.0 - fy),
                (1.0 - fx) * fy,
                fx * fy,
            ],
        }
    }

    /// Allowed node index range along one axis so that the point stays in
    /// the hull of the grid nodes.
    fn range(o: isize, frac_positive: bool, n: usize) -> (isize, isize) {
        let top = n as isize - 1 - o - if frac_positive { 1 } else { 0 };
        (-o, top + 1)
    }

    fn x_range(&self, n: usize) -> (isize, isize) {
        Self::range(self.ox, self.w[1] != 0.0 || self.w[3] != 0.0, n)
    }

    fn y_range(&self, n: usize) -> (isize, isize) {
        Self::range(self.oy, self.w[2] != 0.0 || self.w[3] != 0.0, n)
    }
}

fn split(x: f64) -> (isize, f64) {
    let mut o = x.floor();
    let mut frac = x - o;
    if frac < SNAP {
        frac = 0.0;
    } else if frac > 1.0 - SNAP {
        o += 1.0;
        frac = 0.0;
    }
    (o as isize, frac)
}

#[derive(Debug, Clone)]
struct SigmaStencil {
    prime: Tap,
    star: Tap,
    jx: (usize, usize),
    jy: (usize, usize),
}

#[derive(Debug, Clone)]
struct PairStencil {
    a: isize,
    b: isize,
    jx: (usize, usize),
    jy: (usize, usize),
    weight: f64,
    sigmas: Vec<SigmaStencil>,
}

/// Precomputed interpolation stencils and quadrature weights for one grid.
#[derive(Debug, Clone)]
pub struct CollisionWorkspace {
    n: usize,
    kernel: CollisionKernelConfig,
    pairs: Vec<PairStencil>,
    basis: MomentBasis,
}

fn intersect(ranges: &[(isize, isize)]) -> Option<(usize, usize)> {
    let lo = ranges.iter().map(|r| r.0).max()?;
    let hi = ranges.iter().map(|r| r.1).min()?;
    (hi > lo).then_some((lo as usize, hi as usize))
}

impl CollisionWorkspace {
    pub fn new(grid: &VelocityGrid, kernel: CollisionKernelConfig) -> Result<Self> {
        Self::with_memory_cap(grid, kernel, DEFAULT_MEMORY_CAP)
    }

    pub fn with_memory_cap(
        grid: &VelocityGrid,
        kernel: CollisionKernelConfig,
        cap: usize,
    ) -> Result<Self> {
        kernel.validate()?;
        let n = grid.n_per_dim();
        let half_sigma = kernel.n_sigma / 2;
        let offsets = 2 * n * n;
        let required = offsets
            * (std::mem::size_of::<PairStencil>()
                + half_sigma * std::mem::size_of::<SigmaStencil>());
        if required > cap {
            return Err(Error::MemoryBudget { required, cap });
        }
        let dv = grid.spacing();
        let d_sigma = 2.0 * std::f64::consts::PI / kernel.n_sigma as f64;
        let ni = n as isize;
        let mut pairs = Vec::with_capacity(offsets);
        for b in -(ni - 1)..ni {
            for a in -(ni - 1)..ni {
                if !(a > 0 || (a == 0 && b > 0)) {
                    continue;
                }
                let kx = (-a.min(0), ni - a.max(0));
                let ky = (-b.min(0), ni - b.max(0));
                let r = ((a * a + b * b) as f64).sqrt();
                let weight = 2.0 * kernel.c_gamma * dv * dv * d_sigma * (dv * r).powf(kernel.gamma);
                let mut sigmas = Vec::with_capacity(half_sigma);
                for m in 0..half_sigma {
                    let [sx, sy] = kernel.sigma(m);
                    let cx = 0.5 * a as f64;
                    let cy = 0.5 * b as f64;
                    let prime = Tap::new(cx + 0.5 * r * sx, cy + 0.5 * r * sy);
                    let star = Tap::new(cx - 0.5 * r * sx, cy - 0.5 * r * sy);
                    let jx = intersect(&[kx, prime.x_range(n), star.x_range(n)]);
                    let jy = intersect(&[ky, prime.y_range(n), star.y_range(n)]);
                    if let (Some(jx), Some(jy)) = (jx, jy) {
                        sigmas.push(SigmaStencil {
                            prime,
                            star,
                            jx,
                            jy,
                        });
                    }
                }
                if sigmas.is_empty() {
                    continue;
                }
                let jx = (
                    sigmas.iter().map(|s| s.jx.0).min().unwrap(),
                    sigmas.iter().map(|s| s.jx.1).max().unwrap(),
                );
                let jy = (
                    sigmas.iter().map(|s| s.jy.0).min().unwrap(),
                    sigmas.iter().map(|s| s.jy.1).max().unwrap(),
                );
                pairs.push(PairStencil {
                    a,
                    b,
                    jx,
                    jy,
                    weight,
                    sigmas,
                });
            }
        }
        Ok(Self {
            n,
            kernel,
            pairs,
            basis: MomentBasis::new(grid),
        })
    }

    pub fn kernel(&self) -> &CollisionKernelConfig {
        &self.kernel
    }

    pub fn basis(&self) -> &MomentBasis {
        &self.basis
    }

    pub fn grid(&self) -> &VelocityGrid {
        self.basis.grid()
    }

    /// Post-collision velocities for nodes j, k and direction m, or `None`
    /// when the collision leaves the hull of the nodes and is dropped.
    pub fn post_collision(&self, j: usize, k: usize, m: usize) -> Option<([f64; 2], [f64; 2])> {
        let grid = self.grid();
        let [vx, vy] = grid.velocity(j);
        let [wx, wy] = grid.velocity(k);
        let [sx, sy] = self.kernel.sigma(m);
        let r = ((vx - wx).powi(2) + (vy - wy).powi(2)).sqrt();
        let (cx, cy) = (0.5 * (vx + wx), 0.5 * (vy + wy));
        let p = [cx + 0.5 * r * sx, cy + 0.5 * r * sy];
        let q = [cx - 0.5 * r * sx, cy - 0.5 * r * sy];
        let edge = grid.half_width() - 0.5 * grid.spacing();
        let inside = |v: [f64; 2]| v.iter().all(|c| c.abs() <= edge * (1.0 + 1e-12));
        (inside(p) && inside(q)).then_some((p, q))
    }

    /// Number of (difference, direction) stencils kept.
    pub fn stencil_count(&self) -> usize {
        self.pairs.iter().map(|p| p.sigmas.len()).sum()
    }

    /// Number of (node, difference, direction) evaluations per call.
    pub fn point_count(&self) -> usize {
        self.pairs
            .iter()
            .flat_map(|p| p.sigmas.iter())
            .map(|s| (s.jx.1 - s.jx.0) * (s.jy.1 - s.jy.0))
            .sum()
    }
}

/// Q_q(f) with its invariant content projected out.
pub fn collide_direct(f: &[f64], gas: &GasStatistics, ws: &CollisionWorkspace) -> Result<Vec<f64>> {
    let mut q = vec![0.0; f.len()];
    collide_into(f, gas.signed_theta(), ws, &mut q)?;
    Ok(q)
}

/// The classical operator Q_c: the same quadrature without quantum factors.
pub fn collide_classical(f: &[f64], ws: &CollisionWorkspace) -> Result<Vec<f64>> {
    let mut q = vec![0.0; f.len()];
    collide_into(f, 0.0, ws, &mut q)?;
    Ok(q)
}

/// Writes the projected operator into `out`. `signed_theta` is +θ₀ for
/// bosons, -θ₀ for fermions and 0 for the classical operator.
pub fn collide_into(
    f: &[f64],
    signed_theta: f64,
    ws: &CollisionWorkspace,
    out: &mut [f64],
) -> Result<()> {
    collide_impl(f, signed_theta, ws, out, true)
}

fn collide_impl(
    f: &[f64],
    signed_theta: f64,
    ws: &CollisionWorkspace,
    out: &mut [f64],
    allow_simd: bool,
) -> Result<()> {
    let n = ws.n;
    if f.len() != n * n || out.len() != n * n {
        return Err(Error::GridMismatch(format!(
            "collision on {} values, grid has {} nodes",
            f.len(),
            n * n
        )));
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("collision input"));
    }
    // Zero-padded copy with one extra column and row for the bilinear taps,
    // and slack in front and behind for the masked lanes of a block.
    let stride = n + 1;
    let mut padded = vec![0.0; FRONT + stride * stride + stride + 2 * LANES];
    for (iy, row) in f.chunks_exact(n).enumerate() {
        padded[FRONT + iy * stride..FRONT + iy * stride + n].copy_from_slice(row);
    }
    let mut fe = vec![0.0; n * n + LANES];
    fe[..n * n].copy_from_slice(f);
    let he: Vec<f64> = fe.iter().map(|&v| 1.0 + signed_theta * v).collect();
    let mut acc = vec![0.0; n * n + LANES];
    let rows = Rows {
        padded: &padded,
        stride,
        n,
        f: &fe,
        h: &he,
        signed_theta,
    };
    rows.accumulate(&ws.pairs, &mut acc, allow_simd);
    out.copy_from_slice(&acc[..n * n]);
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("collision operator"));
    }
    ws.basis.conserve_weighted(out, f);
    Ok(())
}

/// Nodes handled together. Accumulators for one block stay in registers
/// while every direction σ of a pair is visited.
const LANES: usize = 8;

/// Leading zeros of the padded array, so taps of masked lanes left of a
/// direction's valid range never index below zero.
const FRONT: usize = 2 * LANES;

struct Rows<'a> {
    padded: &'a [f64],
    stride: usize,
    n: usize,
    f: &'a [f64],
    h: &'a [f64],
    signed_theta: f64,
}

impl Rows<'_> {
    fn accumulate(&self, pairs: &[PairStencil], acc: &mut [f64], allow_simd: bool) {
        #[cfg(target_arch = "x86_64")]
        if allow_simd && std::arch::is_x86_feature_detected!("avx512f") {
            for pair in pairs {
                // SAFETY: the feature was detected at run time and every
                // block stays inside the slack of the padded arrays.
                unsafe { self.pair_avx512(pair, acc) };
            }
            return;
        }
        let _ = allow_simd;
        for pair in pairs {
            self.pair(pair, acc);
        }
    }

    #[inline]
    fn tap_base(&self, t: &Tap, jy: usize, x0: usize) -> usize {
        (FRONT as isize + (jy as isize + t.oy) * self.stride as isize + t.ox + x0 as isize) as usize
    }

    #[inline]
    fn interp(&self, base: usize, w: &[f64; 4]) -> [f64; LANES] {
        let s = self.stride;
        let p = self.padded;
        let t00: &[f64; LANES] = p[base..base + LANES].try_into().unwrap();
        let t10: &[f64; LANES] = p[base + 1..base + 1 + LANES].try_into().unwrap();
        let t01: &[f64; LANES] = p[base + s..base + s + LANES].try_into().unwrap();
        let t11: &[f64; LANES] = p[base + s + 1..base + s + 1 + LANES].try_into().unwrap();
        let mut v = [0.0; LANES];
        for i in 0..LANES {
            v[i] = w[0] * t00[i] + w[1] * t10[i] + w[2] * t01[i] + w[3] * t11[i];
        }
        v
    }

    /// Adds the contribution of one pair offset to `acc` at both j and k = j + (a, b).
    fn pair(&self, pair: &PairStencil, acc: &mut [f64]) {
        let n = self.n;
        let theta = self.signed_theta;
        let theta_sq = theta * theta;
        let quantum = theta != 0.0;
        let (lo, hi) = pair.jx;
        for jy in pair.jy.0..pair.jy.1 {
            let mut x0 = lo;
            while x0 < hi {
                let mut spq = [0.0; LANES];
                let mut sp = [0.0; LANES];
                let mut count = [0.0; LANES];
                for s in &pair.sigmas {
                    if jy < s.jy.0 || jy >= s.jy.1 {
                        continue;
                    }
                    let first = s.jx.0.max(x0);
                    let last = s.jx.1.min(x0 + LANES);
                    if first >= last {
                        continue;
                    }
                    let (m0, m1) = (first - x0, last - x0);
                    let mut mask = [0.0; LANES];
                    for (i, m) in mask.iter_mut().enumerate() {
                        *m = if i >= m0 && i < m1 { 1.0 } else { 0.0 };
                    }
                    let p = self.interp(self.tap_base(&s.prime, jy, x0), &s.prime.w);
                    let q = self.interp(self.tap_base(&s.star, jy, x0), &s.star.w);
                    for i in 0..LANES {
                        spq[i] += mask[i] * p[i] * q[i];
                        count[i] += mask[i];
                    }
                    if quantum {
                        for i in 0..LANES {
                            sp[i] += mask[i] * (p[i] + q[i]);
                        }
                    }
                }
                // Lanes outside every range have zero sums and contribute 0.
                // With A = h h_* - θ₀² f f_* the integrand is
                //   p q A - f f_* - (±θ₀) f f_* (p + q).
                let j = jy * n + x0;
                let k = ((jy as isize + pair.b) * n as isize + x0 as isize + pair.a) as usize;
                let fj: &[f64; LANES] = self.f[j..j + LANES].try_into().unwrap();
                let fk: &[f64; LANES] = self.f[k..k + LANES].try_into().unwrap();
                let hj: &[f64; LANES] = self.h[j..j + LANES].try_into().unwrap();
                let hk: &[f64; LANES] = self.h[k..k + LANES].try_into().unwrap();
                let mut v = [0.0; LANES];
                for i in 0..LANES {
                    let ff = fj[i] * fk[i];
                    let hh = hj[i] * hk[i];
                    v[i] = pair.weight
                        * ((hh - theta_sq * ff) * spq[i] - ff * (count[i] + theta * sp[i]));
                }
                let aj: &mut [f64; LANES] = (&mut acc[j..j + LANES]).try_into().unwrap();
                for i in 0..LANES {
                    aj[i] += v[i];
                }
                let ak: &mut [f64; LANES] = (&mut acc[k..k + LANES]).try_into().unwrap();
                for i in 0..LANES {
                    ak[i] += v[i];
                }
                x0 += LANES;
            }
        }
    }

    /// `pair` with explicit 512-bit vectors and lane masks.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    unsafe fn pair_avx512(&self, pair: &PairStencil, acc: &mut [f64]) {
        use std::arch::x86_64::*;
        let n = self.n;
        let st = self.stride;
        let theta = self.signed_theta;
        let quantum = theta != 0.0;
        let pad = self.padded.as_ptr();
        let (fp, hp) = (self.f.as_ptr(), self.h.as_ptr());
        let ap = acc.as_mut_ptr();
        let ones = _mm512_set1_pd(1.0);
        let weight = _mm512_set1_pd(pair.weight);
        let theta_v = _mm512_set1_pd(theta);
        let theta_sq = _mm512_set1_pd(theta * theta);
        let interp = |base: usize, w: &[f64; 4]| {
            let t00 = _mm512_loadu_pd(pad.add(base));
            let t10 = _mm512_loadu_pd(pad.add(base + 1));
            let t01 = _mm512_loadu_pd(pad.add(base + st));
            let t11 = _mm512_loadu_pd(pad.add(base + st + 1));
            let v = _mm512_mul_pd(_mm512_set1_pd(w[0]), t00);
            let v = _mm512_fmadd_pd(_mm512_set1_pd(w[1]), t10, v);
            let v = _mm512_fmadd_pd(_mm512_set1_pd(w[2]), t01, v);
            _mm512_fmadd_pd(_mm512_set1_pd(w[3]), t11, v)
        };
        let (lo, hi) = pair.jx;
        for jy in pair.jy.0..pair.jy.1 {
            let mut x0 = lo;
            while x0 < hi {
                let mut spq = _mm512_setzero_pd();
                let mut sp = _mm512_setzero_pd();
                let mut count = _mm512_setzero_pd();
                for s in &pair.sigmas {
                    if jy < s.jy.0 || jy >= s.jy.1 {
                        continue;
                    }
                    let first = s.jx.0.max(x0);
                    let last = s.jx.1.min(x0 + LANES);
                    if first >= last {
                        continue;
                    }
                    let k: __mmask8 = ((1u32 << (last - x0)) - (1u32 << (first - x0))) as u8;
                    let p = interp(self.tap_base(&s.prime, jy, x0), &s.prime.w);
                    let q = interp(self.tap_base(&s.star, jy, x0), &s.star.w);
                    spq = _mm512_mask3_fmadd_pd(p, q, spq, k);
                    count = _mm512_mask_add_pd(count, k, count, ones);
                    if quantum {
                        sp = _mm512_mask_add_pd(sp, k, sp, _mm512_add_pd(p, q));
                    }
                }
                let j = jy * n + x0;
                let kk = ((jy as isize + pair.b) * n as isize + x0 as isize + pair.a) as usize;
                let ff = _mm512_mul_pd(_mm512_loadu_pd(fp.add(j)), _mm512_loadu_pd(fp.add(kk)));
                let hh = _mm512_mul_pd(_mm512_loadu_pd(hp.add(j)), _mm512_loadu_pd(hp.add(kk)));
                let a = _mm512_fnmadd_pd(theta_sq, ff, hh);
                let loss = _mm512_mul_pd(ff, _mm512_fmadd_pd(theta_v, sp, count));
                let v = _mm512_mul_pd(weight, _mm512_fmsub_pd(a, spq, loss));
                _mm512_storeu_pd(ap.add(j), _mm512_add_pd(_mm512_loadu_pd(ap.add(j)), v));
                _mm512_storeu_pd(ap.add(kk), _mm512_add_pd(_mm512_loadu_pd(ap.add(kk)), v));
                x0 += LANES;
            }
        }
    }
}

/// Discrete entropy production Σ ln(f/(1 ± θ₀f)) Q Δv².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyProduction {
    pub value: f64,
    /// Nodes skipped because f ≤ 0 or, for fermions, θ₀f ≥ 1.
    pub excluded: usize,
}

pub fn entropy_production(
    f: &[f64],
    q: &[f64],
    gas: &GasStatistics,
    grid: &VelocityGrid,
) -> Result<EntropyProduction> {
    if f.len() != grid.len() || q.len() != grid.len() {
        return Err(Error::GridMismatch("entropy production slices".into()));
    }
    let theta = gas.signed_theta();
    let mut value = 0.0;
    let mut excluded = 0;
    for (&fv, &qv) in f.iter().zip(q) {
        let h = 1.0 + theta * fv;
        if !(fv > 0.0) || !(h > 0.0) {
            excluded += 1;
            continue;
        }
        value += (fv / h).ln() * qv;
    }
    if excluded == f.len() {
        return Err(Error::AllNodesExcluded);
    }
    Ok(EntropyProduction {
        value: value * grid.cell_volume(),
        excluded,
    })
}

/// Applies `collide_into` to every cell of a field, in parallel over cells.
pub fn collide_field(
    f: &[f64],
    signed_theta: f64,
    ws: &CollisionWorkspace,
    out: &mut [f64],
) -> Result<()> {
    let nv = ws.n * ws.n;
    out.par_chunks_exact_mut(nv)
        .zip(f.par_chunks_exact(nv))
        .enumerate()
        .try_for_each(|(i, (o, fc))| {
            collide_into(fc, signed_theta, ws, o).map_err(|e| e.in_cell(i))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{conserved_moments, quantum_maxwellian};
    use crate::statistics::EquilibriumParams;

    /// Unsymmetrized triple loop with interpolation at arbitrary points.
    fn collide_naive(f: &[f64], theta: f64, ws: &CollisionWorkspace) -> Vec<f64> {
        let grid = ws.grid();
        let n = grid.n_per_dim();
        let dv = grid.spacing();
        let l = grid.half_width();
        let interp = |v: [f64; 2]| {
            let x = (v[0] + l) / dv - 0.5;
            let y = (v[1] + l) / dv - 0.5;
            let (ix, iy) = (x.floor() as isize, y.floor() as isize);
            let (fx, fy) = (x - ix as f64, y - iy as f64);
            let at = |i: isize, j: isize| {
                if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                    0.0
                } else {
                    f[j as usize * n + i as usize]
                }
            };
            (1.0 - fx) * (1.0 - fy) * at(ix, iy)
                + fx * (1.0 - fy) * at(ix + 1, iy)
                + (1.0 - fx) * fy * at(ix, iy + 1)
                + fx * fy * at(ix + 1, iy + 1)
        };
        let k = ws.kernel();
        let w = k.c_gamma * dv * dv * 2.0 * std::f64::consts::PI / k.n_sigma as f64;
        let mut q = vec![0.0; n * n];
        for j in 0..n * n {
            for kk in 0..n * n {
                for m in 0..k.n_sigma {
                    if let Some((p, s)) = ws.post_collision(j, kk, m) {
                        let (fp, fs) = (interp(p), interp(s));
                        q[j] += w
                            * (fp * fs * (1.0 + theta * f[j]) * (1.0 + theta * f[kk])
                                - f[j] * f[kk] * (1.0 + theta * fp) * (1.0 + theta * fs));
                    }
                }
            }
        }
        ws.basis().conserve_weighted(&mut q, f);
        q
    }

    fn bumpy(grid: &VelocityGrid) -> Vec<f64> {
        grid.velocities()
            .map(|[x, y]| {
                0.3 * (-(x - 1.0).powi(2) - 0.5 * (y + 0.5).powi(2)).exp()
                    + 0.2 * (-0.7 * (x + 1.2).powi(2) - (y - 0.8).powi(2)).exp()
            })
            .collect()
    }

    #[test]
    fn optimized_matches_naive_quadrature() {
        let grid = VelocityGrid::new(10, 4.0).unwrap();
        let ws = CollisionWorkspace::new(&grid, CollisionKernelConfig::default()).unwrap();
        let f = bumpy(&grid);
        for theta in [0.0, 0.7, -0.9] {
            let slow = collide_naive(&f, theta, &ws);
            let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for simd in [true, false] {
                let mut fast = vec![0.0; f.len()];
                collide_impl(&f, theta, &ws, &mut fast, simd).unwrap();
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-13 * scale, "simd={simd}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn geometry_identities() {
        let grid = VelocityGrid::new(16, 4.0).unwrap();
        let ws = CollisionWorkspace::new(&grid, CollisionKernelConfig::default()).unwrap();
        // σ along v - v_*: m = 0 is σ = (1, 0); pick a horizontal pair.
        let j = grid.index(9, 5);
        let k = grid.index(4, 5);
        let (p, s) = ws.post_collision(j, k, 0).unwrap();
        assert_eq!(p, grid.velocity(j));
        assert_eq!(s, grid.velocity(k));
        for m in 0..16 {
            let (p, s) = ws.post_collision(j, j, m).unwrap();
            assert_eq!(p, grid.velocity(j));
            assert_eq!(s, grid.velocity(j));
        }
        for (j, k) in [(3, 200), (17, 45), (100, 101)] {
            let [vx, vy] = grid.velocity(j);
            let [wx, wy] = grid.velocity(k);
            for m in 0..16 {
                if let Some((p, s)) = ws.post_collision(j, k, m) {
                    let before = vx * vx + vy * vy + wx * wx + wy * wy;
                    let after = p[0] * p[0] + p[1] * p[1] + s[0] * s[0] + s[1] * s[1];
                    assert!((before - after).abs() < 1e-12 * before);
                }
            }
        }
    }

    #[test]
    fn tap_weights_sum_to_one() {
        for (dx, dy) in [(0.3, -1.7), (2.0, 0.0), (-0.999_999_999_999_9, 0.5)] {
            let t = Tap::new(dx, dy);
            assert!((t.w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn memory_cap_is_enforced() {
        let grid = VelocityGrid::new(32, 8.0).unwrap();
        let r = CollisionWorkspace::with_memory_cap(&grid, CollisionKernelConfig::default(), 1024);
        assert!(matches!(r, Err(Error::MemoryBudget { .. })));
        let bad = CollisionKernelConfig {
            n_sigma: 7,
            ..Default::default()
        };
        assert!(CollisionWorkspace::new(&grid, bad).is_err());
    }

    #[test]
    fn projected_moments_vanish_and_equilibrium_is_nearly_fixed() {
        let grid = VelocityGrid::new(16, 8.0).unwrap();
        let ws = CollisionWorkspace::new(&grid, CollisionKernelConfig::default()).unwrap();
        let gas = GasStatistics::bose(1.0).unwrap();
        let q = collide_direct(&bumpy(&grid), &gas, &ws).unwrap();
        let m = conserved_moments(&q, &grid);
        assert!(m.iter().all(|x| x.abs() < 1e-13), "{m:?}");
        let mq = quantum_maxwellian(
            EquilibriumParams { z: 0.5, t: 1.0 },
            [0.0, 0.0],
            &gas,
            &grid,
        )
        .unwrap();
        let q = collide_direct(&mq, &gas, &ws).unwrap();
        let ep = entropy_production(&mq, &q, &gas, &grid).unwrap();
        assert!(ep.value.abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let grid = VelocityGrid::new(8, 4.0).unwrap();
        let ws = CollisionWorkspace::new(&grid, CollisionKernelConfig::default()).unwrap();
        let mut f = vec![0.1; 64];
        f[5] = f64::NAN;
        assert!(matches!(
            collide_classical(&f, &ws),
            Err(Error::NonFinite(_))
        ));
    }
}
