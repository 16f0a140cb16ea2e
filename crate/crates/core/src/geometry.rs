//! Root systems of product type, the reflection group they generate, the
//! weighted measure dω and the orbit distance.
//!
//! Supported structures are Z₂ⁿ on ℝⁿ for n ≤ 2, one multiplicity per axis.
//! Roots are normalized to ⟨α,α⟩ = 2, so the root pair on axis i is ±√2·eᵢ
//! and the density contributed by that axis is (√2|xᵢ|)^{2κᵢ}.

use std::f64::consts::SQRT_2;
use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre, GaussLegendre};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::QuadratureRule;

/// Maximum ambient dimension handled at desk scale.
pub const MAX_DIM: usize = 2;

/// A finite root system, stored as explicit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSystem {
    dim: usize,
    roots: Vec<Vec<f64>>,
    positive: Vec<usize>,
}

impl RootSystem {
    /// Roots ±√2·eᵢ for each listed axis.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Self {
        let mut roots = Vec::with_capacity(2 * axes.len());
        let mut positive = Vec::with_capacity(axes.len());
        for &axis in axes {
            let mut alpha = vec![0.0; dim];
            alpha[axis] = SQRT_2;
            positive.push(roots.len());
            roots.push(alpha.clone());
            roots.push(alpha.iter().map(|v| -v).collect());
        }
        Self {
            dim,
            roots,
            positive,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn roots(&self) -> &[Vec<f64>] {
        &self.roots
    }

    pub fn positive_roots(&self) -> impl Iterator<Item = &[f64]> {
        self.positive.iter().map(|&i| self.roots[i].as_slice())
    }

    /// Checks normalization, closure under negation and under reflections.
    pub fn validate(&self) -> Result<()> {
        for alpha in &self.roots {
            if (dot(alpha, alpha) - 2.0).abs() > 1e-12 {
                return Err(Error::Param(format!("root {alpha:?} is not normalized to 2")));
            }
            let neg: Vec<f64> = alpha.iter().map(|v| -v).collect();
            if !self.contains(&neg) {
                return Err(Error::Param(format!("negative of {alpha:?} missing")));
            }
            for beta in &self.roots {
                if !self.contains(&reflect(alpha, beta)) {
                    return Err(Error::Param("root system not closed under reflections".into()));
                }
            }
        }
        Ok(())
    }

    fn contains(&self, v: &[f64]) -> bool {
        self.roots.iter().any(|r| dist(r, v) <= 1e-12)
    }
}

/// Multiplicity per positive root; constant on orbits by construction for
/// coordinate roots, since the group never maps one axis onto another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityFunction {
    values: Vec<f64>,
}

impl MultiplicityFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Param(format!("multiplicity {v} must be finite and ≥ 0")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// σ_α(x) = x − ⟨α,x⟩α for a root with ⟨α,α⟩ = 2.
pub fn reflect(alpha: &[f64], x: &[f64]) -> Vec<f64> {
    debug_assert!((dot(alpha, alpha) - 2.0).abs() <= 1e-12);
    let c = dot(alpha, x);
    x.iter().zip(alpha).map(|(xi, ai)| xi - c * ai).collect()
}

/// The root system, multiplicities, generated group and derived constants.
#[derive(Debug, Clone)]
pub struct DunklStructure {
    roots: RootSystem,
    kappa: MultiplicityFunction,
    axis_kappa: Vec<f64>,
    group: Vec<Vec<f64>>,
    homogeneous_dim: f64,
    c_kappa: f64,
}

impl DunklStructure {
    /// Z₂ⁿ structure with multiplicity `kappa[i]` on the roots ±√2·eᵢ.
    /// Axes with zero multiplicity carry no root, so κ ≡ 0 gives the trivial group.
    pub fn product(kappa: &[f64]) -> Result<Self> {
        let n = kappa.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::Unsupported(format!(
                "product structures need 1 ≤ n ≤ {MAX_DIM}, got n = {n}"
            )));
        }
        if kappa.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::Param("multiplicities must be finite and ≥ 0".into()));
        }
        let axes: Vec<usize> = (0..n).filter(|&i| kappa[i] > 0.0).collect();
        let multiplicity =
            MultiplicityFunction::new(axes.iter().map(|&i| kappa[i]).collect())?;
        let roots = RootSystem::coordinate(n, &axes);
        roots.validate()?;
        let group = generate_group(&roots);
        let homogeneous_dim = n as f64 + 2.0 * kappa.iter().sum::<f64>();
        let c_kappa = kappa.iter().map(|&k| gaussian_moment(k)).product();
        Ok(Self {
            roots,
            kappa: multiplicity,
            axis_kappa: kappa.to_vec(),
            group,
            homogeneous_dim,
            c_kappa,
        })
    }

    pub fn rank_one(kappa: f64) -> Result<Self> {
        Self::product(&[kappa])
    }

    pub fn dim(&self) -> usize {
        self.axis_kappa.len()
    }

    pub fn roots(&self) -> &RootSystem {
        &self.roots
    }

    pub fn multiplicity(&self) -> &MultiplicityFunction {
        &self.kappa
    }

    /// Multiplicity attached to coordinate axis `i` (0 when the axis has no root).
    pub fn axis_kappa(&self, i: usize) -> f64 {
        self.axis_kappa[i]
    }

    pub fn axis_kappas(&self) -> &[f64] {
        &self.axis_kappa
    }

    /// Group elements as row-major n×n matrices; the identity comes first.
    pub fn group_elements(&self) -> &[Vec<f64>] {
        &self.group
    }

    /// N = n + Σ_{α∈R} κ(α).
    pub fn homogeneous_dim(&self) -> f64 {
        self.homogeneous_dim
    }

    /// ∫ exp(−‖x‖²/2) dω(x).
    pub fn c_kappa(&self) -> f64 {
        self.c_kappa
    }

    /// Stable digest of the structure, used to key cached matrices.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"Z2-product");
        for k in &self.axis_kappa {
            h.update(k.to_le_bytes());
        }
        hex(&h.finalize())
    }

    /// ∏_{α∈R} |⟨α,x⟩|^{κ(α)}.
    pub fn weight(&self, x: &[f64]) -> f64 {
        self.axis_kappa
            .iter()
            .zip(x)
            .map(|(&k, &xi)| axis_weight(k, xi))
            .product()
    }

    /// min over σ ∈ G of ‖σ(x) − y‖.
    pub fn dunkl_metric(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        self.group
            .iter()
            .map(|g| {
                (0..n)
                    .map(|i| {
                        let gx: f64 = (0..n).map(|j| g[i * n + j] * x[j]).sum();
                        (gx - y[i]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// ω(B(x,r)) by the rule restricted to the ball's indicator.
    pub fn ball_volume(&self, rule: &QuadratureRule, x: &[f64], r: f64) -> Result<f64> {
        let fits = (0..self.dim()).all(|i| {
            let (lo, hi) = rule.bounds(i);
            x[i] - r >= lo - 1e-12 && x[i] + r <= hi + 1e-12
        });
        if !fits {
            return Err(Error::DomainOverflow {
                center: x.to_vec(),
                radius: r,
            });
        }
        Ok(rule
            .iter()
            .filter(|(y, _)| dist(x, y) <= r)
            .map(|(_, w)| w)
            .sum())
    }

    /// max(ω(B(x,r)), ω(B(y,r))) by indicator quadrature.
    pub fn v_max(&self, rule: &QuadratureRule, x: &[f64], y: &[f64], r: f64) -> Result<f64> {
        Ok(self.ball_volume(rule, x, r)?.max(self.ball_volume(rule, y, r)?))
    }

    /// ω(B(x,r)) from the closed-form antiderivative on each axis; in two
    /// dimensions the disc is swept with Gauss–Legendre in the polar angle.
    pub fn ball_volume_semianalytic(&self, x: &[f64], r: f64) -> f64 {
        match self.dim() {
            1 => axis_mass(self.axis_kappa[0], x[0] - r, x[0] + r),
            _ => {
                let (k1, k2) = (self.axis_kappa[0], self.axis_kappa[1]);
                let slab = |s: f64| {
                    let h = (r * r - (s - x[0]).powi(2)).max(0.0).sqrt();
                    axis_weight(k1, s) * axis_mass(k2, x[1] - h, x[1] + h)
                };
                // s = x₀ + r sin θ; split where s crosses the hyperplane s = 0.
                let gl = disc_rule();
                let integrand = |theta: f64| slab(x[0] + r * theta.sin()) * r * theta.cos();
                let half_pi = std::f64::consts::FRAC_PI_2;
                let cut = if x[0].abs() < r { Some((-x[0] / r).asin()) } else { None };
                match cut {
                    Some(c) => gl.integrate(-half_pi, c, integrand) + gl.integrate(c, half_pi, integrand),
                    None => gl.integrate(-half_pi, half_pi, integrand),
                }
            }
        }
    }

    /// V(x,y,r) with semi-analytic volumes.
    pub fn v_max_semianalytic(&self, x: &[f64], y: &[f64], r: f64) -> f64 {
        self.ball_volume_semianalytic(x, r)
            .max(self.ball_volume_semianalytic(y, r))
    }

    /// r^n ∏_{α∈R} (|⟨α,x⟩| + r)^{κ(α)}.
    pub fn comparable_volume(&self, x: &[f64], r: f64) -> f64 {
        let n = self.dim() as i32;
        r.powi(n)
            * self
                .axis_kappa
                .iter()
                .zip(x)
                .map(|(&k, &xi)| (SQRT_2 * xi.abs() + r).powf(2.0 * k))
                .product::<f64>()
    }

    pub fn ball_volume_estimate(&self, rule: &QuadratureRule, x: &[f64], r: f64) -> Result<BallVolumeEstimate> {
        Ok(BallVolumeEstimate {
            exact: self.ball_volume(rule, x, r)?,
            comparable: self.comparable_volume(x, r),
        })
    }
}

/// Quadrature value of a ball volume next to the comparable closed expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallVolumeEstimate {
    pub exact: f64,
    pub comparable: f64,
}

impl BallVolumeEstimate {
    pub fn ratio(&self) -> f64 {
        self.exact / self.comparable
    }
}

/// Density factor of one axis: (√2|s|)^{2κ}.
pub fn axis_weight(kappa: f64, s: f64) -> f64 {
    if kappa == 0.0 {
        1.0
    } else {
        (2.0f64).powf(kappa) * s.abs().powf(2.0 * kappa)
    }
}

/// ∫_a^b (√2|s|)^{2κ} ds.
pub fn axis_mass(kappa: f64, a: f64, b: f64) -> f64 {
    let e = 2.0 * kappa + 1.0;
    let anti = |s: f64| s.signum() * s.abs().powf(e);
    (2.0f64).powf(kappa) * (anti(b) - anti(a)) / e
}

/// ∫_ℝ (√2|s|)^{2κ} e^{−s²/2} ds by generalized Gauss–Laguerre in u = s²/2.
fn gaussian_moment(kappa: f64) -> f64 {
    let alpha = FiniteAboveNegOneF64::new(kappa - 0.5).expect("κ ≥ 0 gives α > −1");
    let rule = GaussLaguerre::new(NonZeroUsize::new(8).unwrap(), alpha);
    let base = rule.integrate(|_| 1.0);
    2.0 * (2.0f64).powf(kappa) * (2.0f64).powf(kappa - 0.5) * base
}

fn disc_rule() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(64).unwrap()))
}

fn generate_group(roots: &RootSystem) -> Vec<Vec<f64>> {
    let n = roots.ambient_dim();
    let identity: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
    let generators: Vec<Vec<f64>> = roots
        .positive_roots()
        .map(|a| {
            (0..n * n)
                .map(|i| {
                    let (r, c) = (i / n, i % n);
                    let v = (if r == c { 1.0 } else { 0.0 }) - a[r] * a[c];
                    // √2·√2 leaves a rounding residue; signed permutations are exact.
                    if (v - v.round()).abs() < 1e-12 { v.round() } else { v }
                })
                .collect()
        })
        .collect();
    let mut group = vec![identity];
    let mut frontier = 0;
    while frontier < group.len() {
        let g = group[frontier].clone();
        for s in &generators {
            let prod = matmul(s, &g, n);
            if !group.iter().any(|h| dist(h, &prod) <= 1e-12) {
                group.push(prod);
            }
        }
        frontier += 1;
    }
    group
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..n * n)
        .map(|i| {
            let (r, c) = (i / n, i % n);
            (0..n).map(|k| a[r * n + k] * b[k * n + c]).sum()
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
