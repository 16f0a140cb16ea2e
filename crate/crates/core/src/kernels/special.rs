//! Special functions behind the closed-form kernels: the exponentially
//! scaled confluent hypergeometric function, the subordination integral and
//! a piecewise Chebyshev interpolant used to tabulate it.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Switch from the power series to the large-argument expansion.
const KUMMER_SERIES_LIMIT: f64 = 40.0;

/// e^{−z} M(a, b, z) for z ≥ 0 and 0 ≤ a ≤ b.
///
/// Both branches sum positive terms (or an asymptotic series whose smallest
/// term is below e^{−40}), so the relative accuracy is close to machine level.
pub fn scaled_kummer(a: f64, b: f64, z: f64) -> f64 {
    debug_assert!(z >= 0.0 && a >= 0.0 && b >= a);
    if a == 0.0 {
        return (-z).exp();
    }
    if a == b {
        return 1.0;
    }
    if z <= KUMMER_SERIES_LIMIT {
        let mut term = (-z).exp();
        let mut sum = term;
        let mut n = 0.0;
        loop {
            term *= (a + n) / (b + n) * z / (n + 1.0);
            sum += term;
            n += 1.0;
            if term <= 1e-17 * sum && n > z {
                break;
            }
        }
        sum
    } else {
        let prefactor = (ln_gamma(b) - ln_gamma(a) + (a - b) * z.ln()).exp();
        let (c1, c2) = (b - a, 1.0 - a);
        let mut term = 1.0f64;
        let mut sum = 1.0;
        for n in 0..400 {
            let n = n as f64;
            let next = term * (c1 + n) * (c2 + n) / ((n + 1.0) * z);
            if next.abs() >= term.abs() {
                break;
            }
            sum += next;
            term = next;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        prefactor * sum
    }
}

/// One factor e^{−z}M(a, b, z) evaluated at z = g·u inside the subordination integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerFactor {
    pub a: f64,
    pub b: f64,
    pub g: f64,
}

/// Trapezoid rule in v after u = e^v for
/// ∫₀^∞ u^m e^{−ρu} ∏ e^{−gᵢu}M(aᵢ, bᵢ, gᵢu) du.
///
/// The integrand decays double-exponentially as v → +∞ and like e^{(m+1)v}
/// as v → −∞; the window is cut where both tails are below e^{−40} of the bulk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subordinator {
    pub nodes: usize,
    pub target: f64,
}

impl Default for Subordinator {
    fn default() -> Self {
        Self {
            nodes: 200,
            target: 1e-9,
        }
    }
}

impl Subordinator {
    pub fn new(nodes: usize, target: f64) -> Result<Self> {
        if nodes < 16 {
            return Err(Error::Config(format!("subordination needs ≥ 16 nodes, got {nodes}")));
        }
        Ok(Self { nodes, target })
    }

    /// Returns the integral and the estimated relative error.
    pub fn integrate_with_error(&self, m: f64, rho: f64, factors: &[KummerFactor]) -> (f64, f64) {
        let g_max = factors.iter().map(|f| f.g).fold(0.0, f64::max);
        let v_lo = (-rho.ln()).min(-(1.0 + g_max).ln()) - 40.0 / (m + 1.0) - 2.0;
        let v_hi = ((m + 60.0) / rho).ln();
        let n = self.nodes;
        let h = (v_hi - v_lo) / (n - 1) as f64;
        let mut fine = 0.0;
        let mut coarse = 0.0;
        for i in 0..n {
            let v = v_lo + i as f64 * h;
            let u = v.exp();
            let mut val = ((m + 1.0) * v - rho * u).exp();
            for f in factors {
                val *= scaled_kummer(f.a, f.b, f.g * u);
            }
            fine += val;
            if i % 2 == 0 {
                coarse += val;
            }
        }
        fine *= h;
        coarse *= 2.0 * h;
        let rel = if fine != 0.0 {
            ((fine - coarse) / fine).powi(2)
        } else {
            0.0
        };
        (fine, rel)
    }

    pub fn integrate(&self, m: f64, rho: f64, factors: &[KummerFactor]) -> Result<f64> {
        let (value, rel) = self.integrate_with_error(m, rho, factors);
        if !(rel <= self.target) {
            return Err(Error::Accuracy {
                estimate: rel,
                target: self.target,
                context: format!("subordination integral m={m}, rho={rho:e}"),
            });
        }
        Ok(value)
    }
}

/// Piecewise Chebyshev interpolant on equal panels of [lo, hi].
#[derive(Debug, Clone)]
pub struct ChebyshevTable {
    lo: f64,
    width: f64,
    coeffs: Vec<Vec<f64>>,
}

impl ChebyshevTable {
    pub fn build(
        lo: f64,
        hi: f64,
        panels: usize,
        degree: usize,
        mut f: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let width = (hi - lo) / panels as f64;
        let m = degree + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos())
            .collect();
        let mut coeffs = Vec::with_capacity(panels);
        for p in 0..panels {
            let a = lo + p as f64 * width;
            let values = nodes
                .iter()
                .map(|&s| f(a + 0.5 * width * (s + 1.0)))
                .collect::<Result<Vec<f64>>>()?;
            let c: Vec<f64> = (0..m)
                .map(|k| {
                    let s: f64 = (0..m)
                        .map(|j| {
                            values[j]
                                * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m as f64).cos()
                        })
                        .sum();
                    s * 2.0 / m as f64
                })
                .collect();
            coeffs.push(c);
        }
        Ok(Self { lo, width, coeffs })
    }

    pub fn upper(&self) -> f64 {
        self.lo + self.width * self.coeffs.len() as f64
    }

    /// Evaluates with clamping to the tabulated interval.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.coeffs.len() - 1;
        let pos = ((x - self.lo) / self.width).max(0.0);
        let p = (pos.floor() as usize).min(last);
        let s = (2.0 * (pos - p as f64) - 1.0).clamp(-1.0, 1.0);
        let c = &self.coeffs[p];
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = 2.0 * s * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        s * b1 - b2 + 0.5 * c[0]
    }
}
