//! Dunkl kernel, heat and Poisson kernels, and Littlewood–Paley blocks.
//!
//! On each axis with multiplicity κ > 0 and b = 2κ+1,
//! E(x,y) = e^{|t|}·S_a(2|t|) with t = xy, a = κ + [t > 0] and
//! S_a(z) = e^{−z}M(a, b, z). Product structures multiply the axis factors.
//! The Poisson kernel is the subordinated heat kernel.

pub mod laws;
pub mod special;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::geometry::{dist, DunklStructure};
use crate::grid::{KernelMatrix, KernelMeta, QuadratureRule};
use special::{scaled_kummer, ChebyshevTable, KummerFactor, Subordinator};

/// Beyond this value of η = −ln(1−ζ) the rank-one Poisson factor follows its
/// leading singular behaviour to within e^{−40}.
const TABLE_ETA_MAX: f64 = 40.0;
const TABLE_PANELS: usize = 80;
const TABLE_DEGREE: usize = 16;
const TABLE_NODES: usize = 400;

/// Which Littlewood–Paley block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockVariant {
    /// D_k = P_{2^{−k}} − P_{2^{−k−1}}
    Plain,
    /// D_k^{M0} = P_{2^{−k+M0}} − P_{2^{−k−M0−1}}
    Widened { m0: u32 },
}

impl BlockVariant {
    /// The Poisson times (coarse, fine) whose difference is the block.
    pub fn times(self, k: i32) -> (f64, f64) {
        let m0 = match self {
            BlockVariant::Plain => 0,
            BlockVariant::Widened { m0 } => m0 as i32,
        };
        ((2.0f64).powi(-k + m0), (2.0f64).powi(-k - m0 - 1))
    }
}

/// Kernel families that can be sampled into a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KernelKind {
    Heat { t: f64 },
    Poisson { t: f64 },
    Block { k: i32, variant: BlockVariant },
}

/// Rank-one factor J_a(ζ) = ∫₀^∞ w^κ e^{−w} M(a, 2κ+1, ζw) dw tabulated in η.
#[derive(Debug, Clone)]
struct RankOneTable {
    kappa: f64,
    /// J_{κ+1}(ζ)·(1−ζ)
    same_side: ChebyshevTable,
    /// J_κ(ζ)/(1+η)
    opposite_side: ChebyshevTable,
    same_limit: f64,
    opposite_slope: f64,
    opposite_intercept: f64,
}

impl RankOneTable {
    fn build(kappa: f64, sub: &Subordinator) -> Result<Self> {
        let b = 2.0 * kappa + 1.0;
        let table_sub = Subordinator::new(TABLE_NODES.max(sub.nodes), sub.target)?;
        let j = |a: f64, eta: f64| -> Result<f64> {
            let one_minus = (-eta).exp();
            let zeta = -(-eta).exp_m1();
            table_sub.integrate(
                kappa,
                one_minus,
                &[KummerFactor { a, b, g: zeta }],
            )
        };
        let same_side = ChebyshevTable::build(0.0, TABLE_ETA_MAX, TABLE_PANELS, TABLE_DEGREE, |eta| {
            Ok(j(kappa + 1.0, eta)? * (-eta).exp())
        })?;
        let opposite_side = ChebyshevTable::build(0.0, TABLE_ETA_MAX, TABLE_PANELS, TABLE_DEGREE, |eta| {
            Ok(j(kappa, eta)? / (1.0 + eta))
        })?;
        // Leading behaviour as ζ → 1: J_{κ+1} ~ Γ(2κ+1)/Γ(κ+1)·(1−ζ)^{−1} and
        // J_κ ~ Γ(2κ+1)/Γ(κ)·(η + 2ψ(1) − ψ(κ) − ψ(κ+1)).
        let same_limit = (ln_gamma(b) - ln_gamma(kappa + 1.0)).exp();
        let (opposite_slope, opposite_intercept) = if kappa == 0.0 {
            (0.0, 1.0)
        } else {
            let slope = (ln_gamma(b) - ln_gamma(kappa)).exp();
            (slope, slope * (2.0 * digamma(1.0) - digamma(kappa) - digamma(kappa + 1.0)))
        };
        Ok(Self {
            kappa,
            same_side,
            opposite_side,
            same_limit,
            opposite_slope,
            opposite_intercept,
        })
    }

    /// t·(t²+(|x|+|y|)²)^{−(κ+1)}·J_a(ζ).
    fn reduced(&self, t: f64, x: f64, y: f64) -> f64 {
        let (ax, ay) = (x.abs(), y.abs());
        let plus = t * t + (ax + ay) * (ax + ay);
        let minus = t * t + (ax - ay) * (ax - ay);
        let eta = (plus / minus).ln();
        if x * y > 0.0 {
            let g = if eta <= TABLE_ETA_MAX {
                self.same_side.eval(eta)
            } else {
                self.same_limit
            };
            t * plus.powf(-self.kappa) / minus * g
        } else {
            let j = if eta <= TABLE_ETA_MAX {
                self.opposite_side.eval(eta) * (1.0 + eta)
            } else {
                self.opposite_slope * eta + self.opposite_intercept
            };
            t * plus.powf(-self.kappa - 1.0) * j
        }
    }
}

/// Kernel evaluator bound to one structure.
#[derive(Debug, Clone)]
pub struct Kernels {
    structure: DunklStructure,
    sub: Subordinator,
    table: Option<RankOneTable>,
    /// π^{−1/2} c_κ^{−1} 2^{N/2}
    poisson_const: f64,
}

impl Kernels {
    pub fn new(structure: DunklStructure) -> Result<Self> {
        Self::with_subordinator(structure, Subordinator::default())
    }

    pub fn with_subordinator(structure: DunklStructure, sub: Subordinator) -> Result<Self> {
        let n_hom = structure.homogeneous_dim();
        let poisson_const = PI.powf(-0.5) / structure.c_kappa() * (2.0f64).powf(n_hom / 2.0);
        let table = if structure.dim() == 1 {
            Some(RankOneTable::build(structure.axis_kappa(0), &sub)?)
        } else {
            None
        };
        Ok(Self {
            structure,
            sub,
            table,
            poisson_const,
        })
    }

    pub fn structure(&self) -> &DunklStructure {
        &self.structure
    }

    pub fn subordinator(&self) -> &Subordinator {
        &self.sub
    }

    /// E(x, y) for real arguments.
    pub fn dunkl_kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        self.structure
            .axis_kappas()
            .iter()
            .zip(x.iter().zip(y))
            .map(|(&k, (&xi, &yi))| {
                let t = xi * yi;
                if k == 0.0 {
                    t.exp()
                } else {
                    let a = if t > 0.0 { k + 1.0 } else { k };
                    t.abs().exp() * scaled_kummer(a, 2.0 * k + 1.0, 2.0 * t.abs())
                }
            })
            .product()
    }

    /// h_t(x,y) = c_κ^{−1}(2t)^{−N/2} e^{−(‖x‖²+‖y‖²)/(4t)} E(x/√(2t), y/√(2t)).
    pub fn heat(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
        }
        Ok(self.heat_unchecked(t, x, y))
    }

    fn heat_unchecked(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        let n_hom = self.structure.homogeneous_dim();
        let mut value = (2.0 * t).powf(-n_hom / 2.0) / self.structure.c_kappa();
        for (&k, (&xi, &yi)) in self.structure.axis_kappas().iter().zip(x.iter().zip(y)) {
            if k == 0.0 {
                value *= (-(xi - yi).powi(2) / (4.0 * t)).exp();
            } else {
                let a = if xi * yi > 0.0 { k + 1.0 } else { k };
                let d = xi.abs() - yi.abs();
                value *= (-d * d / (4.0 * t)).exp()
                    * scaled_kummer(a, 2.0 * k + 1.0, (xi * yi).abs() / t);
            }
        }
        value
    }

    /// P_t(x,y) by direct subordination of the heat kernel:
    /// π^{−1/2}∫₀^∞ e^{−u} h_{t²/(4u)}(x,y) u^{−1/2} du.
    pub fn poisson_direct(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("Poisson kernel needs t > 0, got {t}")));
        }
        let n_hom = self.structure.homogeneous_dim();
        let mut rho = 1.0;
        let mut factors = Vec::with_capacity(self.structure.dim());
        for (&k, (&xi, &yi)) in self.structure.axis_kappas().iter().zip(x.iter().zip(y)) {
            if k == 0.0 {
                rho += (xi - yi).powi(2) / (t * t);
            } else {
                let d = xi.abs() - yi.abs();
                rho += d * d / (t * t);
                factors.push(KummerFactor {
                    a: if xi * yi > 0.0 { k + 1.0 } else { k },
                    b: 2.0 * k + 1.0,
                    g: 4.0 * (xi * yi).abs() / (t * t),
                });
            }
        }
        let integral = self.sub.integrate((n_hom - 1.0) / 2.0, rho, &factors)?;
        Ok(self.poisson_const * t.powf(-n_hom) * integral)
    }

    /// P_t(x,y); rank-one structures use the tabulated reduced integral,
    /// product structures fall back to direct subordination.
    pub fn poisson(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("Poisson kernel needs t > 0, got {t}")));
        }
        match &self.table {
            Some(table) => Ok(self.rank_one_poisson(table, t, x[0], y[0])),
            None => self.poisson_direct(t, x, y),
        }
    }

    fn rank_one_poisson(&self, table: &RankOneTable, t: f64, x: f64, y: f64) -> f64 {
        let k = table.kappa;
        // π^{−1/2} c^{−1} 2^{κ+1/2} = poisson_const with N = 2κ+1
        debug_assert!((self.structure.homogeneous_dim() - (2.0 * k + 1.0)).abs() < 1e-15);
        self.poisson_const * table.reduced(t, x, y)
    }

    /// D_k(x,y) or D_k^{M0}(x,y).
    pub fn block(&self, k: i32, variant: BlockVariant, x: &[f64], y: &[f64]) -> Result<f64> {
        let (coarse, fine) = variant.times(k);
        Ok(self.poisson(coarse, x, y)? - self.poisson(fine, x, y)?)
    }

    /// Pointwise value of any supported kernel.
    pub fn eval(&self, kind: KernelKind, x: &[f64], y: &[f64]) -> Result<f64> {
        match kind {
            KernelKind::Heat { t } => self.heat(t, x, y),
            KernelKind::Poisson { t } => self.poisson(t, x, y),
            KernelKind::Block { k, variant } => self.block(k, variant, x, y),
        }
    }

    /// Kernel sampled at `rows × cols` (flat point lists with stride n).
    pub fn matrix(&self, kind: KernelKind, rows: &[f64], cols: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.structure.dim();
        match kind {
            KernelKind::Heat { t } | KernelKind::Poisson { t } if !(t > 0.0) => {
                return Err(Error::Domain(format!("kernel time must be positive, got {t}")))
            }
            _ => {}
        }
        let (nr, nc) = (rows.len() / n, cols.len() / n);
        let columns: Vec<Vec<f64>> = (0..nc)
            .into_par_iter()
            .map(|j| {
                let y = &cols[j * n..(j + 1) * n];
                (0..nr)
                    .map(|i| self.eval(kind, &rows[i * n..(i + 1) * n], y))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut m = DMatrix::zeros(nr, nc);
        for (j, col) in columns.into_iter().enumerate() {
            m.column_mut(j).copy_from_slice(&col);
        }
        Ok(m)
    }

    /// Kernel matrix on the nodes of a rule, tagged for caching.
    pub fn kernel_matrix(&self, kind: KernelKind, rule: &QuadratureRule) -> Result<KernelMatrix> {
        let data = self.matrix(kind, rule.nodes(), rule.nodes())?;
        Ok(KernelMatrix::new(data, self.meta(kind, rule)))
    }

    /// D_k or D_k^{M0} on the nodes of a rule.
    pub fn block_kernel(&self, k: i32, variant: BlockVariant, rule: &QuadratureRule) -> Result<KernelMatrix> {
        self.kernel_matrix(KernelKind::Block { k, variant }, rule)
    }

    pub fn meta(&self, kind: KernelKind, rule: &QuadratureRule) -> KernelMeta {
        KernelMeta::new(
            &self.structure.fingerprint(),
            &serde_json::to_string(&kind).unwrap_or_default(),
            &rule.fingerprint(),
            &format!("nodes={},target={:e}", self.sub.nodes, self.sub.target),
        )
    }

    /// Max ratios of |D_k| and its first differences to the single-scale
    /// size and regularity bounds, over random node pairs in the interior.
    pub fn verify_block_estimates(
        &self,
        rule: &QuadratureRule,
        k: i32,
        eps: f64,
        sampling: &EstimateSampling,
    ) -> Result<EstimateReport> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Param(format!("ε must lie in (0,1], got {eps}")));
        }
        let s = &self.structure;
        let n = s.dim();
        let r = (2.0f64).powi(-k);
        let interior: Vec<usize> = (0..rule.len())
            .filter(|&i| rule.node(i).iter().all(|v| v.abs() <= sampling.region))
            .collect();
        if interior.is_empty() {
            return Err(Error::Sampling("no nodes inside the sampling region".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        let bound = |x: &[f64], y: &[f64]| {
            let d = s.dunkl_metric(x, y);
            let e = dist(x, y);
            (1.0 / s.v_max_semianalytic(x, y, r + d)) * (r / (r + e)).powf(eps)
        };
        let mut report = EstimateReport::default();
        for _ in 0..sampling.pairs {
            let x = rule.node(interior[rng.gen_range(0..interior.len())]).to_vec();
            let y = rule.node(interior[rng.gen_range(0..interior.len())]).to_vec();
            let step: Vec<f64> = random_direction(&mut rng, n)
                .into_iter()
                .map(|u| u * r * rng.gen::<f64>())
                .collect();
            let xp: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let yp: Vec<f64> = y.iter().zip(&step).map(|(a, b)| a + b).collect();
            let dk = self.block(k, BlockVariant::Plain, &x, &y)?;
            let size = dk.abs() / bound(&x, &y);
            let dx = (self.block(k, BlockVariant::Plain, &xp, &y)? - dk).abs();
            let dy = (self.block(k, BlockVariant::Plain, &x, &yp)? - dk).abs();
            let h = (dist(&x, &xp) / r).powf(eps);
            let reg_x = if h > 0.0 { dx / (h * (bound(&x, &y) + bound(&xp, &y))) } else { 0.0 };
            let reg_y = if h > 0.0 { dy / (h * (bound(&x, &y) + bound(&x, &yp))) } else { 0.0 };
            report.size = report.size.max(size);
            report.reg_x = report.reg_x.max(reg_x);
            report.reg_y = report.reg_y.max(reg_y);
        }
        report.pairs = sampling.pairs;
        Ok(report)
    }
}

pub(crate) fn random_direction(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    let theta: f64 = rng.gen::<f64>() * 2.0 * PI;
    vec![theta.cos(), theta.sin()]
}

/// Sampling plan for the single-scale estimate checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSampling {
    pub pairs: usize,
    /// Sample nodes with every coordinate in [−region, region].
    pub region: f64,
    pub seed: u64,
}

/// Max ratios against the size bound and the two regularity bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EstimateReport {
    pub size: f64,
    pub reg_x: f64,
    pub reg_y: f64,
    pub pairs: usize,
}

impl EstimateReport {
    pub fn max_ratio(&self) -> f64 {
        self.size.max(self.reg_x).max(self.reg_y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernels(k: f64) -> Kernels {
        Kernels::new(DunklStructure::rank_one(k).unwrap()).unwrap()
    }

    #[test]
    fn heat_reduces_to_gaussian() {
        let ker = kernels(0.0);
        for (t, x, y) in [(0.1, 0.3, -0.4), (2.0, 1.0, 3.0), (0.01, 0.0, 0.05)] {
            let g = (4.0 * PI * t).powf(-0.5) * (-(x - y) * (x - y) / (4.0 * t)).exp();
            assert!((ker.heat(t, &[x], &[y]).unwrap() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_reduces_to_cauchy() {
        let ker = kernels(0.0);
        for (t, x, y) in [(0.1, 0.3, -0.4), (2.0, 1.0, 3.0), (0.01, 0.0, 0.05)] {
            let c = t / PI / (t * t + (x - y) * (x - y));
            assert!((ker.poisson(t, &[x], &[y]).unwrap() / c - 1.0).abs() < 1e-12);
            assert!((ker.poisson_direct(t, &[x], &[y]).unwrap() / c - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn table_matches_direct_subordination() {
        for k in [0.5, 1.0] {
            let ker = kernels(k);
            for (t, x, y) in [(0.1, 0.3, -0.4), (2.0, 1.0, 3.0), (0.03, 0.5, 0.51), (0.03, 0.5, -0.51), (1.0, 0.0, 2.0)] {
                let a = ker.poisson(t, &[x], &[y]).unwrap();
                let b = ker.poisson_direct(t, &[x], &[y]).unwrap();
                assert!((a / b - 1.0).abs() < 1e-9, "κ={k} t={t} x={x} y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn nonpositive_time_is_a_domain_error() {
        let ker = kernels(1.0);
        assert!(matches!(ker.heat(0.0, &[1.0], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(ker.poisson(-1.0, &[1.0], &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn widened_block_with_zero_m0_is_plain() {
        assert_eq!(BlockVariant::Widened { m0: 0 }.times(3), BlockVariant::Plain.times(3));
    }
}
