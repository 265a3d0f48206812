//! Bose-Einstein / Fermi-Dirac functions and the map between the equilibrium
//! parameters (z, T) and the moments (rho, e).
//!
//! Sign convention: the upper sign belongs to bosons and the lower one to
//! fermions, so `1 ± θ₀f` is `1 + θ₀f` for Bose gases and the equilibrium
//! denominator `z⁻¹e^x ∓ 1` is `z⁻¹e^x - 1` for Bose gases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closest approach of a Bose fugacity to the condensation point z = 1.
pub const BOSE_FUGACITY_GAP: f64 = 1e-12;

/// Upper end of the log-fugacity bracket for Fermi gases.
const FERMI_LOG_Z_MAX: f64 = 700.0;

/// Largest z for which the power series is used.
const SERIES_Z_MAX: f64 = 0.5;

const SINGULAR_DENOMINATOR_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// +1 for bosons, -1 for fermions.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Bose => "bose",
            Statistics::Fermi => "fermi",
        }
    }

    fn check_fugacity(self, z: f64) -> Result<()> {
        if !z.is_finite() || z < 0.0 {
            return Err(Error::Domain(format!(
                "fugacity z = {z} must be finite and positive"
            )));
        }
        if self == Statistics::Bose && z >= 1.0 {
            return Err(Error::Domain(format!(
                "Bose fugacity z = {z} must be below 1 (condensation excluded)"
            )));
        }
        Ok(())
    }

    /// `1 / (z⁻¹ e^x ∓ 1)` for `x ≥ 0`, written without overflow for any
    /// admissible z (including Fermi fugacities far above 1).
    #[inline]
    pub fn occupation(self, x: f64, ln_z: f64) -> f64 {
        let y = x - ln_z;
        match self {
            Statistics::Bose => 1.0 / y.exp_m1(),
            Statistics::Fermi => {
                if y > 0.0 {
                    let w = (-y).exp();
                    w / (1.0 + w)
                } else {
                    1.0 / (y.exp() + 1.0)
                }
            }
        }
    }

    /// Q_ν(z). Closed forms for ν = 0 and ν = 1, the power series for small
    /// z and adaptive quadrature of the defining integral otherwise.
    pub fn q_nu(self, z: f64, nu: f64) -> Result<f64> {
        self.check_fugacity(z)?;
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!(
                "order nu = {nu} must be non-negative"
            )));
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        if nu == 0.0 {
            return Ok(match self {
                Statistics::Bose => z / (1.0 - z),
                Statistics::Fermi => z / (1.0 + z),
            });
        }
        if nu == 1.0 {
            return Ok(match self {
                Statistics::Bose => -(-z).ln_1p(),
                Statistics::Fermi => z.ln_1p(),
            });
        }
        if z <= SERIES_Z_MAX {
            self.q_series(z, nu)
        } else {
            self.q_quadrature(z, nu)
        }
    }

    /// dQ_ν/dz = Q_{ν-1}(z) / z.
    pub fn q_nu_derivative(self, z: f64, nu: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("derivative needs z > 0, got {z}")));
        }
        if !(nu >= 1.0) {
            return Err(Error::Domain(format!("derivative needs nu >= 1, got {nu}")));
        }
        Ok(self.q_nu(z, nu - 1.0)? / z)
    }

    fn q_series(self, z: f64, nu: f64) -> Result<f64> {
        let alternate = self == Statistics::Fermi;
        let mut sum = 0.0;
        let mut zk = 1.0;
        for k in 1..=400 {
            zk *= z;
            let mut term = zk / (k as f64).powf(nu);
            if alternate && k % 2 == 0 {
                term = -term;
            }
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                return Ok(sum);
            }
        }
        Err(Error::Convergence {
            what: "Q_nu power series",
            iterations: 400,
        })
    }

    fn q_quadrature(self, z: f64, nu: f64) -> Result<f64> {
        // x = t² removes the x^{ν-1} singularity at the origin for half-integer ν.
        let ln_z = z.ln();
        let x_max = ln_z.max(0.0) + 50.0 + 4.0 * nu;
        let integrand = |t: f64| {
            let x = t * t;
            2.0 * t.powf(2.0 * nu - 1.0) * self.occupation(x, ln_z)
        };
        let integral = adaptive_gauss_kronrod(integrand, 0.0, x_max.sqrt(), 1e-15)?;
        Ok(integral / statrs::function::gamma::gamma(nu))
    }
}

/// Q_ν(z) for the given statistics.
pub fn q_nu(z: f64, nu: f64, kind: Statistics) -> Result<f64> {
    kind.q_nu(z, nu)
}

/// Q'_ν(z) through the identity z Q'_ν(z) = Q_{ν-1}(z).
pub fn q_nu_derivative(z: f64, nu: f64, kind: Statistics) -> Result<f64> {
    kind.q_nu_derivative(z, nu)
}

/// Particle statistics together with the degeneracy parameter θ₀ and the
/// velocity dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasStatistics {
    pub kind: Statistics,
    pub theta0: f64,
    pub dim: usize,
}

/// Fugacity and temperature of a quantum Maxwellian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumParams {
    pub z: f64,
    pub t: f64,
}

impl GasStatistics {
    pub fn new(kind: Statistics, theta0: f64, dim: usize) -> Result<Self> {
        if !(theta0 > 0.0) || !theta0.is_finite() {
            return Err(Error::Config(format!("theta0 = {theta0} must be positive")));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!(
                "velocity dimension {dim} not supported"
            )));
        }
        Ok(Self { kind, theta0, dim })
    }

    pub fn bose(theta0: f64) -> Result<Self> {
        Self::new(Statistics::Bose, theta0, 2)
    }

    pub fn fermi(theta0: f64) -> Result<Self> {
        Self::new(Statistics::Fermi, theta0, 2)
    }

    /// ν = d/2.
    #[inline]
    pub fn half_dim(&self) -> f64 {
        self.dim as f64 / 2.0
    }

    /// ± θ₀: the coefficient in the quantum factors `1 ± θ₀f`.
    #[inline]
    pub fn signed_theta(&self) -> f64 {
        self.kind.sign() * self.theta0
    }

    pub fn params(&self, z: f64, t: f64) -> Result<EquilibriumParams> {
        self.kind.check_fugacity(z)?;
        if z == 0.0 {
            return Err(Error::Domain("fugacity must be strictly positive".into()));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "temperature T = {t} must be positive"
            )));
        }
        Ok(EquilibriumParams { z, t })
    }

    /// (rho, e) of the equilibrium with the given fugacity and temperature.
    pub fn moments_from_equilibrium(&self, p: EquilibriumParams) -> Result<(f64, f64)> {
        let p = self.params(p.z, p.t)?;
        let nu = self.half_dim();
        let q = self.kind.q_nu(p.z, nu)?;
        let q_up = self.kind.q_nu(p.z, nu + 1.0)?;
        let rho = (2.0 * PI * p.t).powf(nu) / self.theta0 * q;
        let e = nu * p.t * q_up / q;
        Ok((rho, e))
    }

    /// Solves Q_{d/2}(z) = θ₀ρ/(2πT)^{d/2} for z at fixed temperature.
    pub fn fugacity_from_density(&self, rho: f64, t: f64) -> Result<f64> {
        if !(rho > 0.0) || !(t > 0.0) {
            return Err(Error::Domain(format!(
                "need rho > 0 and T > 0, got {rho}, {t}"
            )));
        }
        let nu = self.half_dim();
        let w = self.theta0 * rho / (2.0 * PI * t).powf(nu);
        if self.dim == 2 {
            let z = match self.kind {
                Statistics::Bose => -(-w).exp_m1(),
                Statistics::Fermi => w.exp_m1(),
            };
            if self.kind == Statistics::Bose && z >= 1.0 - BOSE_FUGACITY_GAP {
                return Err(Error::NoSolution {
                    rho,
                    e: f64::NAN,
                    reason: "Bose fugacity reaches the condensation point",
                });
            }
            if !z.is_finite() {
                return Err(Error::NoSolution {
                    rho,
                    e: f64::NAN,
                    reason: "Fermi fugacity overflows",
                });
            }
            return Ok(z);
        }
        let kind = self.kind;
        let ln_w = w.ln();
        let g = |s: f64| -> Result<(f64, f64)> {
            let z = s.exp();
            let q = kind.q_nu(z, nu)?;
            let q_down = kind.q_nu(z, nu - 1.0)?;
            Ok((q.ln() - ln_w, q_down / q))
        };
        let s = self.solve_log_fugacity(g, ln_w, rho, f64::NAN)?;
        Ok(s.exp())
    }

    /// Inverts (rho, e) -> (z, T). T is eliminated through
    /// T = (2e/d) Q_{d/2}/Q_{d/2+1}, leaving the scalar equation
    /// Q_{d/2}^{d/2+1} / Q_{d/2+1}^{d/2} = θ₀ρ (d/(4πe))^{d/2}, which is
    /// solved for s = ln z by safeguarded Newton with bisection fallback.
    pub fn invert_moments(&self, rho: f64, e: f64) -> Result<EquilibriumParams> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NonPositiveDensity(rho));
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::NonPositiveEnergy(e));
        }
        let nu = self.half_dim();
        let d = self.dim as f64;
        let ln_y = (self.theta0 * rho).ln() + nu * (d / (4.0 * PI * e)).ln();
        let kind = self.kind;
        let g = |s: f64| -> Result<(f64, f64)> {
            let z = s.exp();
            let q_down = kind.q_nu(z, nu - 1.0)?;
            let q = kind.q_nu(z, nu)?;
            let q_up = kind.q_nu(z, nu + 1.0)?;
            let value = (nu + 1.0) * q.ln() - nu * q_up.ln() - ln_y;
            let slope = (nu + 1.0) * q_down / q - nu * q / q_up;
            Ok((value, slope))
        };
        let s = self.solve_log_fugacity(g, ln_y, rho, e)?;
        let z = s.exp();
        let t = (2.0 * e / d) * kind.q_nu(z, nu)? / kind.q_nu(z, nu + 1.0)?;
        self.params(z, t)
    }

    /// Root of an increasing function of s = ln z on the admissible range.
    fn solve_log_fugacity(
        &self,
        mut g: impl FnMut(f64) -> Result<(f64, f64)>,
        guess: f64,
        rho: f64,
        e: f64,
    ) -> Result<f64> {
        let s_hi = match self.kind {
            Statistics::Bose => (-BOSE_FUGACITY_GAP).ln_1p(),
            Statistics::Fermi => FERMI_LOG_Z_MAX,
        };
        let (g_hi, _) = g(s_hi)?;
        if g_hi < 0.0 {
            return Err(Error::NoSolution {
                rho,
                e,
                reason: match self.kind {
                    Statistics::Bose => "Bose fugacity reaches the condensation point",
                    Statistics::Fermi => "energy below the degenerate Fermi ground state",
                },
            });
        }
        if g_hi == 0.0 {
            return Ok(s_hi);
        }
        let mut s_lo = guess.min(s_hi) - 1.0;
        let mut expansions = 0;
        while g(s_lo)?.0 >= 0.0 {
            s_lo -= 5.0;
            expansions += 1;
            if expansions > 200 {
                return Err(Error::Convergence {
                    what: "fugacity bracket expansion",
                    iterations: expansions,
                });
            }
        }
        safeguarded_newton(g, s_lo, s_hi, guess, 1e-15, 200)
    }

    /// M(z) and N(z) entering the time derivative of the quantum Maxwellian.
    pub fn eval_mn(&self, z: f64, t: f64, e: f64) -> Result<(f64, f64)> {
        let p = self.params(z, t)?;
        if !(e > 0.0) {
            return Err(Error::NonPositiveEnergy(e));
        }
        let nu = self.half_dim();
        let d = self.dim as f64;
        let q_down = self.kind.q_nu(p.z, nu - 1.0)?;
        let q = self.kind.q_nu(p.z, nu)?;
        let first = (nu + 1.0) * q_down;
        let second = d * d * p.t / (4.0 * e) * q;
        let denominator = first - second;
        if denominator.abs() < SINGULAR_DENOMINATOR_RATIO * first.abs().max(second.abs()) {
            return Err(Error::SingularDenominator { z, denominator });
        }
        Ok((q / denominator, q_down / denominator))
    }
}

/// Newton's method for an increasing function, bracketed by
/// `g(lo) < 0 < g(hi)`. Steps that leave the bracket are replaced by bisection.
pub(crate) fn safeguarded_newton(
    mut g: impl FnMut(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..max_iter {
        let (value, slope) = g(x)?;
        if value == 0.0 {
            return Ok(x);
        }
        if value < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - value / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol * (1.0 + x.abs()) || hi - lo <= tol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence {
        what: "safeguarded Newton",
        iterations: max_iter,
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to a relative tolerance.
pub(crate) fn adaptive_gauss_kronrod(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    const INITIAL_PANELS: usize = 8;
    const MAX_PANELS: usize = 20_000;
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut pending: Vec<(f64, f64, f64, f64)> = (0..INITIAL_PANELS)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == INITIAL_PANELS {
                b
            } else {
                lo + width
            };
            let (value, err) = gauss_kronrod_15(&f, lo, hi);
            (lo, hi, value, err)
        })
        .collect();
    let scale = pending.iter().map(|p| p.2).sum::<f64>().abs();
    let mut total = 0.0;
    let mut panels = pending.len();
    while let Some((lo, hi, value, err)) = pending.pop() {
        let local_tol = rel_tol * scale * (hi - lo) / (b - a);
        let roundoff = 50.0 * f64::EPSILON * value.abs();
        if err <= local_tol.max(roundoff) || hi - lo < 1e-14 * (b - a) {
            total += value;
            continue;
        }
        panels += 2;
        if panels > MAX_PANELS {
            return Err(Error::Convergence {
                what: "adaptive Gauss-Kronrod quadrature",
                iterations: panels,
            });
        }
        let mid = 0.5 * (lo + hi);
        let (left, left_err) = gauss_kronrod_15(&f, lo, mid);
        let (right, right_err) = gauss_kronrod_15(&f, mid, hi);
        pending.push((lo, mid, left, left_err));
        pending.push((mid, hi, right, right_err));
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("Q_nu quadrature"));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on the raw integral in x, with 2e5 panels.
    /// Deliberately unrelated to the Gauss-Kronrod path.
    fn q_two_simpson(z: f64, kind: Statistics) -> f64 {
        let n = 200_000;
        let x_max = z.ln().max(0.0) + 60.0;
        let h = x_max / n as f64;
        let f = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                x / (x.exp() / z - kind.sign())
            }
        };
        let mut sum = f(0.0) + f(x_max);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn closed_forms_match_reference_values() {
        let q1 = Statistics::Bose.q_nu(0.5, 1.0).unwrap();
        assert!((q1 - 2f64.ln()).abs() < 1e-15);
        assert!((Statistics::Fermi.q_nu(1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((Statistics::Bose.q_nu(0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((Statistics::Fermi.q_nu(3.0, 1.0).unwrap() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn q_two_at_half_matches_dilogarithm() {
        let expected = PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2);
        let series = Statistics::Bose.q_nu(0.5, 2.0).unwrap();
        let quad = Statistics::Bose.q_quadrature(0.5, 2.0).unwrap();
        assert!(
            (series - expected).abs() < 1e-14 * expected,
            "{series} vs {expected}"
        );
        assert!(
            (quad - expected).abs() < 1e-12 * expected,
            "{quad} vs {expected}"
        );
        let simpson = q_two_simpson(0.5, Statistics::Bose);
        assert!((simpson - 0.582_240_526_465_012_6).abs() < 1e-9);
    }

    #[test]
    fn q_two_quadrature_matches_reflection_formulas() {
        // Bose: Li2(z) = π²/6 - ln z ln(1-z) - Li2(1-z).
        for &z in &[0.6, 0.75, 0.9, 0.99] {
            let li2_reflected = Statistics::Bose.q_series(1.0 - z, 2.0).unwrap();
            let expected = PI * PI / 6.0 - z.ln() * (1.0 - z).ln() - li2_reflected;
            let got = Statistics::Bose.q_nu(z, 2.0).unwrap();
            assert!(
                (got - expected).abs() < 1e-12 * expected,
                "z={z}: {got} vs {expected}"
            );
        }
        // Fermi: -Li2(-z) = π²/6 + ln²(z)/2 + Li2(-1/z) for z > 1.
        for &z in &[2.5, 5.0, 50.0, 1e4] {
            let tail = -Statistics::Fermi.q_series(1.0 / z, 2.0).unwrap();
            let expected = PI * PI / 6.0 + 0.5 * z.ln().powi(2) + tail;
            let got = Statistics::Fermi.q_nu(z, 2.0).unwrap();
            assert!(
                (got - expected).abs() < 1e-12 * expected,
                "z={z}: {got} vs {expected}"
            );
        }
        let simpson = q_two_simpson(0.8, Statistics::Fermi);
        let got = Statistics::Fermi.q_nu(0.8, 2.0).unwrap();
        assert!((got - simpson).abs() < 1e-9);
    }

    #[test]
    fn small_fugacity_behaves_like_z() {
        for kind in [Statistics::Bose, Statistics::Fermi] {
            for nu in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5] {
                let z = 1e-9;
                let q = kind.q_nu(z, nu).unwrap();
                assert!((q / z - 1.0).abs() < 1e-8, "{kind:?} nu={nu}");
            }
            assert_eq!(kind.q_nu(0.0, 2.0).unwrap(), 0.0);
            assert!((kind.q_nu_derivative(1e-12, 1.0).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_identity_by_central_differences() {
        let delta = 1e-5;
        for kind in [Statistics::Bose, Statistics::Fermi] {
            for nu in [1.0, 2.0] {
                let z = 0.3;
                let fd = (kind.q_nu(z + delta, nu).unwrap() - kind.q_nu(z - delta, nu).unwrap())
                    / (2.0 * delta);
                let exact = kind.q_nu_derivative(z, nu).unwrap();
                assert!(
                    (fd - exact).abs() < 1e-8,
                    "{kind:?} nu={nu}: {fd} vs {exact}"
                );
            }
        }
        assert!((Statistics::Bose.q_nu_derivative(0.5, 1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            Statistics::Bose.q_nu(1.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Statistics::Bose.q_nu(-0.1, 2.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Statistics::Fermi.q_nu(f64::NAN, 2.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Statistics::Fermi.q_nu_derivative(0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(GasStatistics::bose(0.0).is_err());
    }

    #[test]
    fn moments_of_bose_half() {
        let gas = GasStatistics::bose(1.0).unwrap();
        let (rho, e) = gas
            .moments_from_equilibrium(EquilibriumParams { z: 0.5, t: 1.0 })
            .unwrap();
        let li2 = PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2);
        assert!((rho - 2.0 * PI * 2f64.ln()).abs() < 1e-13);
        assert!((e - li2 / 2f64.ln()).abs() < 1e-13);
        assert!((rho - 4.355_172).abs() < 1e-6 && (e - 0.839_995_5).abs() < 1e-7);

        let heavy = GasStatistics::bose(4.0).unwrap();
        let (rho4, e4) = heavy
            .moments_from_equilibrium(EquilibriumParams { z: 0.5, t: 1.0 })
            .unwrap();
        assert!((rho4 * 4.0 - rho).abs() < 1e-13 && (e4 - e).abs() < 1e-15);
    }

    #[test]
    fn classical_limit_inversion() {
        let gas = GasStatistics::bose(1e-8).unwrap();
        let p = gas.invert_moments(1.0, 1.0).unwrap();
        assert!((p.t - 1.0).abs() < 1e-6);
        assert!((p.z - 1e-8 / (2.0 * PI)).abs() < 1e-6 * p.z);
        let fermi = GasStatistics::fermi(1e-8).unwrap();
        let q = fermi.invert_moments(1.0, 1.0).unwrap();
        assert!((q.t - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fermi_round_trip() {
        let gas = GasStatistics::fermi(1.0).unwrap();
        let (rho, e) = gas
            .moments_from_equilibrium(EquilibriumParams { z: 0.5, t: 2.0 })
            .unwrap();
        let p = gas.invert_moments(rho, e).unwrap();
        assert!((p.z - 0.5).abs() < 1e-10 && (p.t - 2.0).abs() < 1e-10);
    }

    #[test]
    fn bose_near_condensation_never_reaches_one() {
        let gas = GasStatistics::bose(1.0).unwrap();
        let (rho, e) = gas
            .moments_from_equilibrium(EquilibriumParams { z: 0.9995, t: 1.0 })
            .unwrap();
        let p = gas.invert_moments(rho, e).unwrap();
        assert!(p.z < 1.0 && (p.z - 0.9995).abs() < 1e-9);
        // Pushing the density far beyond: either a valid z < 1 or NoSolution.
        match gas.invert_moments(rho * 1e3, e * 1e-3) {
            Ok(p) => assert!(p.z < 1.0),
            Err(err) => assert!(matches!(err, Error::NoSolution { .. })),
        }
    }

    #[test]
    fn fermi_below_ground_state_has_no_solution() {
        // For d = 2 the scalar equation saturates at 2 as z -> infinity.
        let gas = GasStatistics::fermi(1.0).unwrap();
        let rho = 10.0;
        let e = rho / (4.0 * PI) * 0.9;
        assert!(matches!(
            gas.invert_moments(rho, e),
            Err(Error::NoSolution { .. })
        ));
    }

    #[test]
    fn mn_classical_limit_and_identity() {
        let gas = GasStatistics::bose(1e-8).unwrap();
        let z = 1e-8;
        let t = 1.0;
        let (_, e) = gas
            .moments_from_equilibrium(EquilibriumParams { z, t })
            .unwrap();
        let (m, n) = gas.eval_mn(z, t, e).unwrap();
        assert!((m - 1.0).abs() < 1e-6 && (n - 1.0).abs() < 1e-6);

        let gas = GasStatistics::bose(1.0).unwrap();
        let (_, e) = gas
            .moments_from_equilibrium(EquilibriumParams { z: 0.5, t: 1.0 })
            .unwrap();
        let (m, n) = gas.eval_mn(0.5, 1.0, e).unwrap();
        let q1 = 2f64.ln();
        let expected_m = q1 / (2.0 - q1 / e);
        assert!((m - expected_m).abs() < 1e-13);
        assert!((n * q1 - m).abs() < 1e-13);
    }

    #[test]
    fn half_integer_orders_use_quadrature() {
        // Q_{3/2}(z) for z > 0.5 against its own series at z = 0.5 continuity.
        let below = Statistics::Bose.q_series(0.5, 1.5).unwrap();
        let above = Statistics::Bose.q_quadrature(0.5, 1.5).unwrap();
        assert!((below - above).abs() < 1e-12 * below);
        let gas = GasStatistics::new(Statistics::Fermi, 1.0, 3).unwrap();
        let (rho, e) = gas
            .moments_from_equilibrium(EquilibriumParams { z: 3.0, t: 0.7 })
            .unwrap();
        let p = gas.invert_moments(rho, e).unwrap();
        assert!((p.z - 3.0).abs() < 1e-9 && (p.t - 0.7).abs() < 1e-10);
    }
}
