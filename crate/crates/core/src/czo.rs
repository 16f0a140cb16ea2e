//! Calderón–Zygmund kernel checks: size and regularity constants, smooth
//! molecules, almost-orthogonality decay across scales and Besov-norm
//! boundedness experiments.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::besov::{besov_norm, BesovParams, NormSpec};
use crate::error::{Error, Result};
use crate::frame::{FrameGeometry, FrameOperator};
use crate::geometry::{dist, DunklStructure};
use crate::besov::SchurFamily;
use crate::grid::{AxisRule, CoefficientField, MultiscaleGrid, QuadratureRule};
use crate::kernels::{random_direction, BlockVariant, KernelKind, Kernels};
use crate::linalg::{linear_fit, weighted_dot, PowerIteration};

/// A kernel K(x, y) defined off the diagonal, with its claimed regularity.
pub trait CzKernel: Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64>;

    /// Values at many pairs; kernels with expensive evaluation override this.
    fn eval_pairs(&self, pairs: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        pairs.par_iter().map(|(x, y)| self.eval(x, y)).collect()
    }

    fn epsilon(&self) -> f64;

    fn declared_t1_zero(&self) -> bool {
        false
    }

    fn declared_t1star_zero(&self) -> bool {
        false
    }
}

/// K ≡ 0.
#[derive(Debug, Clone, Copy)]
pub struct ZeroKernel {
    pub epsilon: f64,
}

impl CzKernel for ZeroKernel {
    fn eval(&self, _: &[f64], _: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn declared_t1_zero(&self) -> bool {
        true
    }

    fn declared_t1star_zero(&self) -> bool {
        true
    }
}

/// D_k or D_k^{M0} as a CZ kernel.
#[derive(Debug, Clone, Copy)]
pub struct BlockCz<'a> {
    pub kernels: &'a Kernels,
    pub k: i32,
    pub variant: BlockVariant,
    pub epsilon: f64,
}

impl CzKernel for BlockCz<'_> {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.kernels.block(self.k, self.variant, x, y)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn declared_t1_zero(&self) -> bool {
        true
    }

    fn declared_t1star_zero(&self) -> bool {
        true
    }
}

/// h_t(x, y): positive, so it has no cancellation.
#[derive(Debug, Clone, Copy)]
pub struct HeatCz<'a> {
    pub kernels: &'a Kernels,
    pub t: f64,
    pub epsilon: f64,
}

impl CzKernel for HeatCz<'_> {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.kernels.heat(self.t, x, y)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// B − T where B = P_{2^{−k_max−1}} − P_{2^{−k_min}} is the band identity
/// that T approaches as M0 grows, and T is the frame operator's kernel.
#[derive(Debug, Clone)]
pub struct RemainderKernel<'g, 'a> {
    pub geometry: &'g FrameGeometry<'a>,
    pub epsilon: f64,
}

impl RemainderKernel<'_, '_> {
    pub fn band(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (fine, coarse) = band_times(self.geometry);
        let k = self.geometry.kernels();
        Ok(k.poisson(fine, x, y)? - k.poisson(coarse, x, y)?)
    }
}

fn band_times(g: &FrameGeometry) -> (f64, f64) {
    let c = g.config();
    ((2.0f64).powi(-c.k_max - 1), (2.0f64).powi(-c.k_min))
}

fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl CzKernel for RemainderKernel<'_, '_> {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.band(x, y)? - self.geometry.kernel(x, y)?)
    }

    fn eval_pairs(&self, pairs: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        let mut syn: HashMap<Vec<u64>, Vec<Vec<f64>>> = HashMap::new();
        let mut ana: HashMap<Vec<u64>, Vec<Vec<f64>>> = HashMap::new();
        for (x, y) in pairs {
            if let Entry::Vacant(e) = syn.entry(point_key(x)) {
                e.insert(self.geometry.synthesis_profile(x)?);
            }
            if let Entry::Vacant(e) = ana.entry(point_key(y)) {
                e.insert(self.geometry.analysis_profile(y)?);
            }
        }
        pairs
            .iter()
            .map(|(x, y)| {
                let t = self.geometry.combine(&syn[&point_key(x)], &ana[&point_key(y)]);
                Ok(self.band(x, y)? - t)
            })
            .collect()
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn declared_t1_zero(&self) -> bool {
        true
    }

    fn declared_t1star_zero(&self) -> bool {
        true
    }
}

/// One probe: (x, y) with perturbations x′, y′ inside d(x,y)/2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CzProbe {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xp: Vec<f64>,
    pub yp: Vec<f64>,
}

/// Draws probe pairs with Dunkl distance in [d_min, d_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzSampler {
    pub pairs: usize,
    /// x has every coordinate in [−region, region].
    pub region: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub seed: u64,
    /// Snap every point to the cell centres of this lattice spacing.
    pub snap: Option<f64>,
}

fn snap_point(x: &mut [f64], h: Option<f64>) {
    if let Some(h) = h {
        x.iter_mut().for_each(|v| *v = ((*v / h).floor() + 0.5) * h);
    }
}

/// Checks the hypotheses every regularity probe must satisfy.
pub fn validate_probe(s: &DunklStructure, p: &CzProbe) -> Result<()> {
    let d = s.dunkl_metric(&p.x, &p.y);
    if !(d > 0.0) {
        return Err(Error::Sampling(format!("probe {:?}, {:?} has d(x,y) = 0", p.x, p.y)));
    }
    if dist(&p.x, &p.xp) > 0.5 * d || dist(&p.y, &p.yp) > 0.5 * d {
        return Err(Error::Sampling(format!(
            "perturbation exceeds d(x,y)/2 = {} at x={:?}",
            0.5 * d,
            p.x
        )));
    }
    Ok(())
}

impl CzSampler {
    pub fn draw(&self, s: &DunklStructure) -> Result<Vec<CzProbe>> {
        if !(self.d_min > 0.0 && self.d_max >= self.d_min) {
            return Err(Error::Sampling("need 0 < d_min ≤ d_max".into()));
        }
        let n = s.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.pairs);
        let mut attempts = 0usize;
        let (l0, l1) = (self.d_min.log2(), self.d_max.log2());
        while out.len() < self.pairs {
            attempts += 1;
            if attempts > 1000 * self.pairs.max(1) {
                return Err(Error::Sampling("could not draw enough valid probes".into()));
            }
            let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-self.region..=self.region)).collect();
            let delta = (2.0f64).powf(rng.gen_range(l0..=l1));
            let u = random_direction(&mut rng, n);
            let mut y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + delta * b).collect();
            snap_point(&mut x, self.snap);
            snap_point(&mut y, self.snap);
            let d = s.dunkl_metric(&x, &y);
            if d < self.d_min || d > self.d_max {
                continue;
            }
            let mut perturb = |p: &[f64]| -> Vec<f64> {
                let r = 0.5 * d * rng.gen::<f64>();
                let dir = random_direction(&mut rng, n);
                let mut q: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + r * b).collect();
                snap_point(&mut q, self.snap);
                q
            };
            let xp = perturb(&x);
            let yp = perturb(&y);
            let probe = CzProbe { x, y, xp, yp };
            if probe.xp == probe.x || probe.yp == probe.y || validate_probe(s, &probe).is_err() {
                continue;
            }
            out.push(probe);
        }
        Ok(out)
    }
}

/// Fitted constants of the size and two regularity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzNormEstimate {
    pub size_const: f64,
    pub reg_x_const: f64,
    pub reg_y_const: f64,
    pub l2_norm: Option<f64>,
}

impl CzNormEstimate {
    pub fn kernel_const(&self) -> f64 {
        self.size_const.max(self.reg_x_const).max(self.reg_y_const)
    }

    /// ‖T‖_{2,2} + ‖K‖, when the L² norm was measured.
    pub fn dcz_norm(&self) -> Option<f64> {
        self.l2_norm.map(|l2| l2 + self.kernel_const())
    }
}

/// Sup ratios of |K| and its first differences against the CZ bounds.
pub fn check_cz_estimates(
    kernel: &dyn CzKernel,
    s: &DunklStructure,
    probes: &[CzProbe],
    l2_norm: Option<f64>,
) -> Result<CzNormEstimate> {
    for p in probes {
        validate_probe(s, p)?;
    }
    let mut pairs: Vec<(&[f64], &[f64])> = Vec::with_capacity(3 * probes.len());
    for p in probes {
        pairs.push((&p.x, &p.y));
        pairs.push((&p.xp, &p.y));
        pairs.push((&p.x, &p.yp));
    }
    let values = kernel.eval_pairs(&pairs)?;
    let eps = kernel.epsilon();
    let mut est = CzNormEstimate {
        size_const: 0.0,
        reg_x_const: 0.0,
        reg_y_const: 0.0,
        l2_norm,
    };
    for (p, v) in probes.iter().zip(values.chunks(3)) {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Sampling(format!("kernel is not finite near x={:?}", p.x)));
        }
        let d = s.dunkl_metric(&p.x, &p.y);
        let e = dist(&p.x, &p.y);
        let vol = s.ball_volume_semianalytic(&p.x, d);
        est.size_const = est.size_const.max(v[0].abs() * vol / (d / e).powf(eps));
        let hx = (dist(&p.x, &p.xp) / e).powf(eps);
        let hy = (dist(&p.y, &p.yp) / e).powf(eps);
        est.reg_x_const = est.reg_x_const.max((v[0] - v[1]).abs() * vol / hx);
        est.reg_y_const = est.reg_y_const.max((v[0] - v[2]).abs() * vol / hy);
    }
    Ok(est)
}

/// L² operator norm of f ↦ Σ_j w_j K(x_i, x_j) f_j with the diagonal dropped.
pub fn discrete_l2_norm(
    kernel: &dyn CzKernel,
    rule: &QuadratureRule,
    power: &PowerIteration,
) -> Result<f64> {
    let n = rule.len();
    let mut m = DMatrix::zeros(n, n);
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| if i == j { Ok(0.0) } else { kernel.eval(rule.node(i), rule.node(j)) })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    for (j, c) in cols.into_iter().enumerate() {
        m.column_mut(j).copy_from_slice(&c);
    }
    // In the ω inner product, A = K W has adjoint W^{-1} Kᵀ W.
    let w = rule.weights().to_vec();
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let mt = m.transpose();
    let res = power.run(
        start,
        |v| {
            let wv = nalgebra::DVector::from_iterator(n, v.iter().zip(&w).map(|(a, b)| a * b));
            let av = &m * wv;
            let back = &mt * nalgebra::DVector::from_iterator(n, av.iter().zip(&w).map(|(a, b)| a * b));
            Ok(back.as_slice().to_vec())
        },
        |a, b| weighted_dot(&w, a, b),
    )?;
    Ok(res.norm)
}

/// Where molecule checks look for the sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoleculeSampling {
    pub points: usize,
    pub region: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoleculeReport {
    pub size_ratio: f64,
    pub regularity_ratio: f64,
    pub cancellation_defect: f64,
}

impl MoleculeReport {
    pub fn passes(&self, max_ratio: f64, defect_tol: f64) -> bool {
        self.size_ratio.is_finite()
            && self.regularity_ratio.is_finite()
            && self.size_ratio <= max_ratio
            && self.regularity_ratio <= max_ratio
            && self.cancellation_defect <= defect_tol
    }
}

/// Size and regularity ratios of f at scale k around x0, plus |∫ f dω| on `rule`.
#[allow(clippy::too_many_arguments)]
pub fn check_molecule(
    f: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    s: &DunklStructure,
    k: i32,
    x0: &[f64],
    eta: f64,
    rule: &QuadratureRule,
    sampling: &MoleculeSampling,
) -> Result<MoleculeReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Param(format!("η must lie in (0, 1], got {eta}")));
    }
    let r = (2.0f64).powi(-k);
    let n = s.dim();
    let bound = |x: &[f64]| {
        let d = s.dunkl_metric(x, x0);
        (1.0 / s.v_max_semianalytic(x, x0, r + d)) * (r / (r + dist(x, x0))).powf(eta)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut size_ratio = 0.0f64;
    let mut regularity_ratio = 0.0f64;
    for _ in 0..sampling.points {
        let x: Vec<f64> = (0..n)
            .map(|i| x0[i] + rng.gen_range(-sampling.region..=sampling.region))
            .collect();
        let step = r * rng.gen::<f64>();
        let xp: Vec<f64> = x
            .iter()
            .zip(random_direction(&mut rng, n))
            .map(|(a, u)| a + step * u)
            .collect();
        let (fx, fxp) = (f(&x)?, f(&xp)?);
        let (bx, bxp) = (bound(&x), bound(&xp));
        size_ratio = size_ratio.max(fx.abs() / bx);
        let h = (dist(&x, &xp) / r).powf(eta);
        if h > 0.0 {
            regularity_ratio = regularity_ratio.max((fx - fxp).abs() / (h * (bx + bxp)));
        }
    }
    let values: Vec<f64> = rule
        .nodes()
        .par_chunks(n)
        .map(f)
        .collect::<Result<_>>()?;
    let cancellation_defect = weighted_dot(rule.weights(), &values, &vec![1.0; values.len()]).abs();
    Ok(MoleculeReport {
        size_ratio,
        regularity_ratio,
        cancellation_defect,
    })
}

/// Composed kernels between two scales sampled on a fixed point set.
pub trait CompositeFamily {
    /// Rows and columns indexed by the sample points.
    fn composite(&self, k: i32, k_prime: i32) -> Result<DMatrix<f64>>;
    fn points(&self) -> &[f64];
}

/// D_{k′} D_k^{M0}(x, y) = ∫ D_{k′}(x, z) D_k^{M0}(z, y) dω(z) on an integration rule.
pub struct BlockComposite<'a> {
    pub kernels: &'a Kernels,
    pub rule: &'a QuadratureRule,
    pub points: Vec<f64>,
    pub m0: u32,
}

impl CompositeFamily for BlockComposite<'_> {
    fn composite(&self, k: i32, k_prime: i32) -> Result<DMatrix<f64>> {
        let z = self.rule.nodes();
        let left = self.kernels.matrix(
            KernelKind::Block {
                k: k_prime,
                variant: BlockVariant::Plain,
            },
            &self.points,
            z,
        )?;
        let mut right = self.kernels.matrix(
            KernelKind::Block {
                k,
                variant: BlockVariant::Widened { m0: self.m0 },
            },
            z,
            &self.points,
        )?;
        for (mut row, w) in right.row_iter_mut().zip(self.rule.weights()) {
            row *= *w;
        }
        Ok(left * right)
    }

    fn points(&self) -> &[f64] {
        &self.points
    }
}

/// |D_{k′}D_k^{M0}|(x_{Q′}, x_Q) between target cubes at k′ and source cubes at k.
pub struct CompositeSchur<'a> {
    pub kernels: &'a Kernels,
    pub rule: &'a QuadratureRule,
    pub source: &'a MultiscaleGrid,
    pub target: &'a MultiscaleGrid,
    pub m0: u32,
}

impl SchurFamily for CompositeSchur<'_> {
    fn block(&self, k_target: i32, k_source: i32) -> Result<DMatrix<f64>> {
        let missing = |k| Error::Config(format!("scale {k} is not in the grid family"));
        let tg = self.target.grid(k_target).ok_or_else(|| missing(k_target))?;
        let sg = self.source.grid(k_source).ok_or_else(|| missing(k_source))?;
        let z = self.rule.nodes();
        let left = self.kernels.matrix(
            KernelKind::Block {
                k: k_target,
                variant: BlockVariant::Plain,
            },
            tg.centers(),
            z,
        )?;
        let mut right = self.kernels.matrix(
            KernelKind::Block {
                k: k_source,
                variant: BlockVariant::Widened { m0: self.m0 },
            },
            z,
            sg.centers(),
        )?;
        for (mut row, w) in right.row_iter_mut().zip(self.rule.weights()) {
            row *= *w;
        }
        Ok((left * right).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub k: i32,
    pub k_prime: i32,
    pub log2_max: f64,
}

/// log₂ of the normalized composite maxima against |k − k′| and its linear fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub rows: Vec<DecayRow>,
    /// (gap, largest log₂ value among pairs with that gap)
    pub per_gap: Vec<(u32, f64)>,
    pub slope: f64,
    pub intercept: f64,
}

/// Fits log₂ m(k, k′) against |k − k′|, where m is the max over point pairs of
/// |composite(x,y)|·V(x,y,r+d)·((r+d)/r)^γ with r = 2^{max(−k, −k′)}.
pub fn ortho_decay(
    family: &dyn CompositeFamily,
    s: &DunklStructure,
    pairs: &[(i32, i32)],
    gamma: f64,
) -> Result<DecayFit> {
    let mut gaps: Vec<u32> = pairs.iter().map(|(a, b)| a.abs_diff(*b)).collect();
    gaps.sort_unstable();
    gaps.dedup();
    if gaps.len() < 3 {
        return Err(Error::Config(format!(
            "decay fit needs at least 3 distinct scale gaps, got {}",
            gaps.len()
        )));
    }
    let n = s.dim();
    let pts = family.points();
    let np = pts.len() / n;
    let mut rows = Vec::with_capacity(pairs.len());
    for &(k, kp) in pairs {
        let c = family.composite(k, kp)?;
        let r = (2.0f64).powi((-k).max(-kp));
        let mut best = 0.0f64;
        for i in 0..np {
            let x = &pts[i * n..(i + 1) * n];
            for j in 0..np {
                let y = &pts[j * n..(j + 1) * n];
                let d = s.dunkl_metric(x, y);
                let v = c[(i, j)].abs() * s.v_max_semianalytic(x, y, r + d) * ((r + d) / r).powf(gamma);
                best = best.max(v);
            }
        }
        rows.push(DecayRow {
            k,
            k_prime: kp,
            log2_max: best.log2(),
        });
    }
    let per_gap: Vec<(u32, f64)> = gaps
        .iter()
        .map(|&g| {
            let m = rows
                .iter()
                .filter(|r| r.k.abs_diff(r.k_prime) == g)
                .map(|r| r.log2_max)
                .fold(f64::NEG_INFINITY, f64::max);
            (g, m)
        })
        .collect();
    let x: Vec<f64> = per_gap.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = per_gap.iter().map(|p| p.1).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    Ok(DecayFit {
        rows,
        per_gap,
        slope,
        intercept,
    })
}

/// The three boundedness regimes for CZ operators on Besov spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundednessCase {
    /// T1 = 0, 0 < α < ε₀, p > N/(N+α)
    I,
    /// T*1 = 0, −ε₀ < α < 0, p > max{N/(N−α), N/(N+ε₀+α)}
    II,
    /// T1 = T*1 = 0, |α| < ε₀, p > max{N/(N+ε₀), N/(N+ε₀+α)}
    III,
}

impl BoundednessCase {
    /// Checks (α, p) against the case; N is the homogeneous dimension and ε₀ the regularity exponent.
    pub fn validate(self, params: &BesovParams, eps0: f64) -> Result<()> {
        let (a, p, n) = (params.alpha(), params.p(), params.homogeneous_dim());
        let fail = |why: String| Err(Error::Config(format!("case {self:?}: {why}")));
        match self {
            BoundednessCase::I => {
                if !(a > 0.0 && a < eps0) {
                    return fail(format!("requires 0 < α < ε₀ = {eps0}, got α = {a}"));
                }
                let lb = n / (n + a);
                if !(p > lb) {
                    return fail(format!("requires p > N/(N+α) = {lb}, got p = {p}"));
                }
            }
            BoundednessCase::II => {
                if !(a < 0.0 && a > -eps0) {
                    return fail(format!("requires −ε₀ < α < 0 with ε₀ = {eps0}, got α = {a}"));
                }
                let lb = (n / (n - a)).max(n / (n + eps0 + a));
                if !(p > lb) {
                    return fail(format!("requires p > max{{N/(N−α), N/(N+ε₀+α)}} = {lb}, got p = {p}"));
                }
            }
            BoundednessCase::III => {
                if !(a.abs() < eps0) {
                    return fail(format!("requires |α| < ε₀ = {eps0}, got α = {a}"));
                }
                let lb = (n / (n + eps0)).max(n / (n + eps0 + a));
                if !(p > lb) {
                    return fail(format!("requires p > max{{N/(N+ε₀), N/(N+ε₀+α)}} = {lb}, got p = {p}"));
                }
            }
        }
        Ok(())
    }

    fn needs(self) -> (bool, bool) {
        match self {
            BoundednessCase::I => (true, false),
            BoundednessCase::II => (false, true),
            BoundednessCase::III => (true, true),
        }
    }
}

/// An operator on node values of a fixed quadrature.
pub trait DiscreteOperator: Sync {
    fn apply_many(&self, fs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>>;
    fn epsilon(&self) -> f64;
    fn declared_t1_zero(&self) -> bool;
    fn declared_t1star_zero(&self) -> bool;
}

/// The zero operator.
#[derive(Debug, Clone, Copy)]
pub struct ZeroOperator {
    pub epsilon: f64,
}

impl DiscreteOperator for ZeroOperator {
    fn apply_many(&self, fs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        Ok(fs.iter().map(|f| vec![0.0; f.len()]).collect())
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn declared_t1_zero(&self) -> bool {
        true
    }

    fn declared_t1star_zero(&self) -> bool {
        true
    }
}

/// c·T.
pub struct ScaledOperator<'o> {
    pub inner: &'o dyn DiscreteOperator,
    pub factor: f64,
}

impl DiscreteOperator for ScaledOperator<'_> {
    fn apply_many(&self, fs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .inner
            .apply_many(fs)?
            .into_iter()
            .map(|v| v.into_iter().map(|x| self.factor * x).collect())
            .collect())
    }

    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    fn declared_t1_zero(&self) -> bool {
        self.inner.declared_t1_zero()
    }

    fn declared_t1star_zero(&self) -> bool {
        self.inner.declared_t1star_zero()
    }
}

/// f ↦ B f − T f on the frame's nodes, with B applied without storing it.
pub struct RemainderOperator<'f, 'a> {
    pub frame: &'f FrameOperator<'a>,
    pub epsilon: f64,
}

impl RemainderOperator<'_, '_> {
    /// B f for several f at once; B is evaluated entry by entry.
    pub fn band_many(&self, fs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let rule = self.frame.rule();
        let (fine, coarse) = band_times(self.frame.geometry());
        let k = self.frame.geometry().kernels();
        let n = rule.len();
        let wf: Vec<Vec<f64>> = fs
            .iter()
            .map(|f| f.iter().zip(rule.weights()).map(|(a, w)| a * w).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = rule.node(i);
                let mut acc = vec![0.0; fs.len()];
                for j in 0..n {
                    let y = rule.node(j);
                    let b = k.poisson(fine, x, y)? - k.poisson(coarse, x, y)?;
                    for (a, f) in acc.iter_mut().zip(&wf) {
                        *a += b * f[j];
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok((0..fs.len()).map(|c| rows.iter().map(|r| r[c]).collect()).collect())
    }
}

impl DiscreteOperator for RemainderOperator<'_, '_> {
    fn apply_many(&self, fs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let band = self.band_many(fs)?;
        band.into_iter()
            .zip(fs)
            .map(|(b, f)| {
                let t = self.frame.apply(f)?;
                Ok(b.iter().zip(&t).map(|(x, y)| x - y).collect())
            })
            .collect()
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn declared_t1_zero(&self) -> bool {
        true
    }

    fn declared_t1star_zero(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub case: BoundednessCase,
    pub spec: NormSpec,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// ‖T f‖/‖f‖ in the Besov norm for each input, coefficients taken by the frame's analysis.
pub fn besov_boundedness_experiment(
    op: &dyn DiscreteOperator,
    frame: &FrameOperator,
    params: &BesovParams,
    case: BoundednessCase,
    inputs: &[Vec<f64>],
) -> Result<BoundednessReport> {
    case.validate(params, op.epsilon())?;
    let (t1, t1s) = case.needs();
    if (t1 && !op.declared_t1_zero()) || (t1s && !op.declared_t1star_zero()) {
        return Err(Error::Config(format!(
            "case {case:?} needs vanishing conditions the operator does not declare"
        )));
    }
    let spec = params.spec();
    let outputs = op.apply_many(inputs)?;
    let mut ratios = Vec::with_capacity(inputs.len());
    for (f, tf) in inputs.iter().zip(&outputs) {
        let nf = besov_norm(&frame.analysis(f)?, frame.grids(), &spec)?.value;
        let ntf = besov_norm(&frame.analysis(tf)?, frame.grids(), &spec)?.value;
        ratios.push(if nf > 0.0 { ntf / nf } else { 0.0 });
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(BoundednessReport {
        case,
        spec,
        ratios,
        max_ratio,
    })
}

/// Coefficients D_{k′}(T f)(x_{Q′}) of f = Σ_k Σ_Q ω(Q) D_k^{M0}(·, x_Q) λ_Q, split by
/// whether the source scale is finer (k > k′) or not.
pub fn split_coefficients(
    op: &dyn DiscreteOperator,
    frame: &FrameOperator,
    lambda: &CoefficientField,
) -> Result<(CoefficientField, CoefficientField)> {
    let scales: Vec<i32> = frame.grids().scales().collect();
    let pieces: Vec<Vec<f64>> = scales
        .iter()
        .map(|&k| frame.synthesis_where(lambda, |j| j == k))
        .collect();
    let images = op.apply_many(&pieces)?;
    let mut finer = CoefficientField::zeros(frame.grids());
    let mut coarser = CoefficientField::zeros(frame.grids());
    for (&k, img) in scales.iter().zip(&images) {
        let c = frame.analysis(img)?;
        for (kp, vals) in c.iter() {
            let target = if k > kp { &mut finer } else { &mut coarser };
            let dst = target.scale_mut(kp).expect("same grids");
            dst.iter_mut().zip(vals).for_each(|(d, v)| *d += v);
        }
    }
    Ok((finer, coarser))
}

/// Local rule for ∫ g dω where g concentrates at scale `t` around `center`
/// and its reflection: geometric cells in every axis out to `outer`.
pub fn adapted_rule(s: &DunklStructure, center: &[f64], t: f64, outer: f64, order: usize) -> Result<QuadratureRule> {
    let axes = (0..s.dim())
        .map(|i| {
            let c = center[i];
            let mut edges = vec![-outer, 0.0, outer];
            for anchor in [c, -c] {
                edges.push(anchor);
                let mut w = t / 8.0;
                let mut off = 0.0;
                while off < outer {
                    off += w;
                    edges.push(anchor + off);
                    edges.push(anchor - off);
                    w *= 1.4;
                }
            }
            edges.retain(|e| e.abs() <= outer);
            edges.sort_by(f64::total_cmp);
            edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * t);
            // Keep 0 exact so the hyperplane cell uses the Jacobi rule.
            edges.iter_mut().for_each(|e| {
                if e.abs() < 1e-12 * t {
                    *e = 0.0
                }
            });
            edges.dedup();
            AxisRule::from_edges(s.axis_kappa(i), edges, order)
        })
        .collect::<Result<Vec<_>>>()?;
    QuadratureRule::from_axes(axes)
}

/// Largest |T1| and |T*1| of the remainder kernel over sample points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VanishingReport {
    pub t1_max: f64,
    pub t1star_max: f64,
}

/// Verifies T1 = T*1 = 0 for B − T: every cube mass ∫D_k(x_Q,·)dω and
/// ∫D_k^{M0}(·,x_Q)dω is integrated on a rule adapted to x_Q, then combined.
pub fn verify_remainder_vanishing(geometry: &FrameGeometry, points: &[Vec<f64>]) -> Result<VanishingReport> {
    let kern = geometry.kernels();
    let s = kern.structure();
    let (fine, coarse) = band_times(geometry);
    let m0 = geometry.m0();
    let mass = |center: &[f64], k: i32, variant: BlockVariant| -> Result<f64> {
        let (tc, tf) = variant.times(k);
        let rule = adapted_rule(s, center, tf, 1e9 * tc, 8)?;
        Ok(rule
            .iter()
            .map(|(y, w)| Ok(w * kern.block(k, variant, center, y)?))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .sum())
    };
    let band_mass = |x: &[f64]| -> Result<f64> {
        let rule = adapted_rule(s, x, fine, 1e9 * coarse, 8)?;
        Ok(rule
            .iter()
            .map(|(y, w)| Ok(w * (kern.poisson(fine, x, y)? - kern.poisson(coarse, x, y)?)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .sum())
    };
    let grids = geometry.grids().grids();
    let plain: Vec<Vec<f64>> = grids
        .iter()
        .map(|g| {
            (0..g.len())
                .into_par_iter()
                .map(|q| mass(g.center(q), g.k(), BlockVariant::Plain))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let widened: Vec<Vec<f64>> = grids
        .iter()
        .map(|g| {
            (0..g.len())
                .into_par_iter()
                .map(|q| mass(g.center(q), g.k(), BlockVariant::Widened { m0 }))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut report = VanishingReport {
        t1_max: 0.0,
        t1star_max: 0.0,
    };
    for x in points {
        let b = band_mass(x)?;
        let t1 = b - geometry.combine(&geometry.synthesis_profile(x)?, &plain);
        let t1s = b - geometry.combine(&widened, &geometry.analysis_profile(x)?);
        report.t1_max = report.t1_max.max(t1.abs());
        report.t1star_max = report.t1star_max.max(t1s.abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_hypotheses() {
        let p = BesovParams::new(-0.1, 2.0, 2.0, 3.0).unwrap();
        assert!(BoundednessCase::I.validate(&p, 0.5).is_err());
        assert!(BoundednessCase::II.validate(&p, 0.5).is_ok());
        assert!(BoundednessCase::III.validate(&p, 0.5).is_ok());
        assert!(BoundednessCase::III.validate(&p, 0.05).is_err());
        let low_p = BesovParams::new(0.2, 0.9, 1.0, 3.0).unwrap();
        // N/(N+α) = 3/3.2 = 0.9375 > 0.9
        assert!(BoundednessCase::I.validate(&low_p, 0.5).is_err());
    }

    #[test]
    fn zero_kernel_has_zero_constants() {
        let s = DunklStructure::rank_one(1.0).unwrap();
        let probes = CzSampler {
            pairs: 20,
            region: 3.0,
            d_min: 0.25,
            d_max: 2.0,
            seed: 3,
            snap: None,
        }
        .draw(&s)
        .unwrap();
        let est = check_cz_estimates(&ZeroKernel { epsilon: 1.0 }, &s, &probes, None).unwrap();
        assert_eq!(est.kernel_const(), 0.0);
    }

    #[test]
    fn invalid_probe_is_a_sampling_error() {
        let s = DunklStructure::rank_one(1.0).unwrap();
        let bad = CzProbe {
            x: vec![1.0],
            y: vec![2.0],
            xp: vec![1.9],
            yp: vec![2.0],
        };
        assert!(matches!(
            check_cz_estimates(&ZeroKernel { epsilon: 1.0 }, &s, &[bad], None),
            Err(Error::Sampling(_))
        ));
    }
}
