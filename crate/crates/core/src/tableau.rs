//! Explicit Butcher tableaux for the exponential Runge-Kutta schemes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButcherTableau {
    pub name: String,
    /// Strictly lower triangular, row i holds a_ij for j < i.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    /// Validates an explicit tableau. The abscissae must start at 0, increase
    /// strictly and stay in [0, 1].
    pub fn new(name: &str, a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let k = b.len();
        if k == 0 || a.len() != k || c.len() != k {
            return Err(Error::Tableau(format!("inconsistent sizes for {k} stages")));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Tableau(format!(
                    "row {i} of A has {} entries",
                    row.len()
                )));
            }
            if row[i..].iter().any(|&x| x != 0.0) {
                return Err(Error::Tableau(format!(
                    "row {i} of A is not strictly lower triangular"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - c[i]).abs() > TOL {
                return Err(Error::Tableau(format!(
                    "row sum {sum} differs from c_{i} = {}",
                    c[i]
                )));
            }
        }
        let total: f64 = b.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::Tableau(format!("weights sum to {total}")));
        }
        if c[0] != 0.0 {
            return Err(Error::Tableau("first abscissa must be 0".into()));
        }
        if c.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Tableau(
                "abscissae must increase strictly (repeated c_i are not supported)".into(),
            ));
        }
        if c[k - 1] > 1.0 {
            return Err(Error::Tableau(format!(
                "last abscissa {} exceeds 1",
                c[k - 1]
            )));
        }
        Ok(Self {
            name: name.to_string(),
            a,
            b,
            c,
        })
    }

    pub fn forward_euler() -> Self {
        Self::new("forward_euler", vec![vec![0.0]], vec![1.0], vec![0.0]).unwrap()
    }

    /// Explicit midpoint rule.
    pub fn midpoint() -> Self {
        Self::new(
            "rk2",
            vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            vec![0.0, 1.0],
            vec![0.0, 0.5],
        )
        .unwrap()
    }

    /// Heun's third-order method.
    pub fn heun3() -> Self {
        Self::new(
            "rk3",
            vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0 / 3.0, 0.0, 0.0],
                vec![0.0, 2.0 / 3.0, 0.0],
            ],
            vec![0.25, 0.0, 0.75],
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
        )
        .unwrap()
    }

    /// Looks up a built-in tableau: `forward_euler`, `rk2` or `rk3`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "forward_euler" | "fe" | "euler" => Ok(Self::forward_euler()),
            "rk2" | "midpoint" => Ok(Self::midpoint()),
            "rk3" | "heun3" => Ok(Self::heun3()),
            other => Err(Error::Config(format!("unknown tableau {other}"))),
        }
    }

    #[inline]
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Classical order conditions up to third order that hold, for tests.
    pub fn order(&self) -> usize {
        let k = self.stages();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let mut order = 1;
        if (dot(&self.b, &self.c) - 0.5).abs() < TOL {
            order = 2;
            let c2: Vec<f64> = self.c.iter().map(|c| c * c).collect();
            let ac: Vec<f64> = (0..k).map(|i| dot(&self.a[i], &self.c)).collect();
            if (dot(&self.b, &c2) - 1.0 / 3.0).abs() < TOL
                && (dot(&self.b, &ac) - 1.0 / 6.0).abs() < TOL
            {
                order = 3;
            }
        }
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_orders() {
        assert_eq!(ButcherTableau::forward_euler().order(), 1);
        assert_eq!(ButcherTableau::midpoint().order(), 2);
        assert_eq!(ButcherTableau::heun3().order(), 3);
    }

    #[test]
    fn rejects_repeated_abscissae_and_bad_rows() {
        // Classical RK4 has c = (0, 1/2, 1/2, 1).
        let rk4 = ButcherTableau::new(
            "rk4",
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            vec![0.0, 0.5, 0.5, 1.0],
        );
        assert!(matches!(rk4, Err(Error::Tableau(_))));
        let bad_sum = ButcherTableau::new(
            "x",
            vec![vec![0.0, 0.0], vec![0.4, 0.0]],
            vec![0.0, 1.0],
            vec![0.0, 0.5],
        );
        assert!(bad_sum.is_err());
        assert!(ButcherTableau::by_name("rk7").is_err());
    }
}
