//! Small dense helpers shared by the frame and CZ modules.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Σ w_j a_j b_j
pub fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

pub fn weighted_norm(w: &[f64], a: &[f64]) -> f64 {
    weighted_dot(w, a, a).sqrt()
}

pub fn euclidean_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Stopping rule for power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerIteration {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerResult {
    pub norm: f64,
    pub iterations: usize,
}

impl PowerIteration {
    /// Largest singular value of A from x ↦ A*A x, where `dot` is the inner
    /// product in which A* is the adjoint.
    pub fn run(
        &self,
        start: Vec<f64>,
        mut normal: impl FnMut(&[f64]) -> Result<Vec<f64>>,
        dot: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<PowerResult> {
        let mut v = start;
        let n0 = dot(&v, &v).sqrt();
        if n0 == 0.0 {
            return Err(Error::Param("power iteration needs a nonzero start vector".into()));
        }
        v.iter_mut().for_each(|x| *x /= n0);
        let mut lambda = 0.0;
        for it in 1..=self.max_iter {
            let u = normal(&v)?;
            let next = dot(&v, &u);
            let nu = dot(&u, &u).sqrt();
            if nu == 0.0 {
                return Ok(PowerResult {
                    norm: 0.0,
                    iterations: it,
                });
            }
            v = u.into_iter().map(|x| x / nu).collect();
            if it > 1 && (next - lambda).abs() <= self.tol * next.abs() {
                return Ok(PowerResult {
                    norm: next.max(0.0).sqrt(),
                    iterations: it,
                });
            }
            lambda = next;
        }
        Err(Error::Accuracy {
            estimate: f64::NAN,
            target: self.tol,
            context: format!("power iteration did not settle in {} steps", self.max_iter),
        })
    }

    /// Spectral norm of a dense matrix in the Euclidean inner product.
    pub fn matrix_norm(&self, m: &DMatrix<f64>, start: Vec<f64>) -> Result<PowerResult> {
        let mt = m.transpose();
        self.run(
            start,
            |v| {
                let x = nalgebra::DVector::from_column_slice(v);
                Ok((&mt * (m * x)).as_slice().to_vec())
            },
            |a, b| a.iter().zip(b).map(|(x, y)| x * y).sum(),
        )
    }
}

/// Largest singular value by a full SVD.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_matches_svd() {
        let m = DMatrix::from_fn(6, 5, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0 + 0.1 * r as f64);
        let p = PowerIteration {
            max_iter: 2000,
            tol: 1e-14,
        }
        .matrix_norm(&m, vec![1.0; 5])
        .unwrap();
        assert!((p.norm - spectral_norm(&m)).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i) = linear_fit(&x, &y);
        assert!((s + 0.5).abs() < 1e-14 && (i - 2.0).abs() < 1e-14);
    }
}
