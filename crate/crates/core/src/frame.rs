//! The frame operator T f = Σ_k Σ_Q ω(Q) D_k^{M0}(·, x_Q) D_k(f)(x_Q), its
//! remainder on a band-limited probe subspace, Neumann inversion and the
//! reconstruction diagnostics built on top of it.
//!
//! The node-level remainder I − T has an aliasing floor: sampling D_k(f) at
//! cube centres leaves a ripple of a few percent no matter how large M0 is.
//! Operator norms and Neumann iterations are therefore taken on the
//! Galerkin compression Π_S(I − T)Π_S to a subspace S of smooth bumps; the
//! unprojected residual is still reported.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm, NormSpec};
use crate::error::{Error, Result};
use crate::grid::{cache, CoefficientField, KernelMatrix, KernelMeta, MultiscaleGrid, QuadratureRule, UniformSpec};
use crate::kernels::{BlockVariant, KernelKind, Kernels};
use crate::linalg::{euclidean_norm, weighted_dot, weighted_norm, PowerIteration};

/// Scale range, widening and discretization of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub m0: u32,
    pub half_width: f64,
    /// Coarsest quadrature cell; shrunk to the finest cube side when needed.
    pub base_cell: f64,
    pub order: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            k_min: -2,
            k_max: 2,
            m0: 1,
            half_width: 48.0,
            base_cell: 1.0 / 16.0,
            order: 2,
        }
    }
}

impl FrameConfig {
    pub fn with_m0(self, m0: u32) -> Self {
        Self { m0, ..self }
    }

    /// Same layout with every quadrature cell halved.
    pub fn refined(self) -> Self {
        Self {
            base_cell: 0.5 * self.base_cell,
            ..self
        }
    }

    pub fn finest_side(&self) -> f64 {
        (2.0f64).powi(-self.k_max - self.m0 as i32)
    }

    pub fn cell_width(&self) -> f64 {
        self.base_cell.min(self.finest_side())
    }

    pub fn rule(&self, kernels: &Kernels) -> Result<QuadratureRule> {
        QuadratureRule::uniform(
            kernels.structure(),
            UniformSpec {
                half_width: self.half_width,
                cell_width: self.cell_width(),
                order: self.order,
            },
        )
    }
}

/// Grids and rule of a frame without any stored matrices; evaluates the
/// kernel of T pointwise.
#[derive(Debug, Clone)]
pub struct FrameGeometry<'a> {
    kernels: &'a Kernels,
    config: FrameConfig,
    rule: QuadratureRule,
    grids: MultiscaleGrid,
}

impl<'a> FrameGeometry<'a> {
    pub fn build(kernels: &'a Kernels, config: FrameConfig) -> Result<Self> {
        let rule = config.rule(kernels)?;
        Self::build_on(kernels, config, rule)
    }

    pub fn build_on(kernels: &'a Kernels, config: FrameConfig, rule: QuadratureRule) -> Result<Self> {
        let grids = MultiscaleGrid::build(config.k_min, config.k_max, config.m0, config.half_width, &rule)?;
        Ok(Self {
            kernels,
            config,
            rule,
            grids,
        })
    }

    pub fn kernels(&self) -> &'a Kernels {
        self.kernels
    }

    pub fn config(&self) -> &FrameConfig {
        &self.config
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn grids(&self) -> &MultiscaleGrid {
        &self.grids
    }

    pub fn m0(&self) -> u32 {
        self.config.m0
    }

    /// Kernel of T at (x, y): Σ_k Σ_Q ω(Q) D_k^{M0}(x, x_Q) D_k(x_Q, y).
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let px = self.synthesis_profile(x)?;
        let py = self.analysis_profile(y)?;
        Ok(self.combine(&px, &py))
    }

    /// D_k^{M0}(x, x_Q) for every scale and cube.
    pub fn synthesis_profile(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.profile(x, BlockVariant::Widened { m0: self.config.m0 })
    }

    /// D_k(x_Q, y) for every scale and cube.
    pub fn analysis_profile(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.profile(y, BlockVariant::Plain)
    }

    fn profile(&self, x: &[f64], variant: BlockVariant) -> Result<Vec<Vec<f64>>> {
        self.grids
            .grids()
            .iter()
            .map(|g| {
                let m = self.kernels.matrix(KernelKind::Block { k: g.k(), variant }, x, g.centers())?;
                Ok(m.as_slice().to_vec())
            })
            .collect()
    }

    /// Σ_k Σ_Q ω(Q) a_{k,Q} b_{k,Q}
    pub fn combine(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        self.grids
            .grids()
            .iter()
            .zip(a.iter().zip(b))
            .map(|(g, (a, b))| weighted_dot(g.measures(), a, b))
            .sum()
    }
}

/// Per-scale analysis A_k = D_k(x_Q, y_j) and widened synthesis
/// D_k^{M0}(x_Q, x_i), both stored cubes × nodes.
#[derive(Debug, Clone)]
pub struct FrameOperator<'a> {
    geometry: FrameGeometry<'a>,
    analysis: Vec<DMatrix<f64>>,
    synthesis_t: Vec<DMatrix<f64>>,
}

impl<'a> FrameOperator<'a> {
    pub fn build(kernels: &'a Kernels, config: FrameConfig) -> Result<Self> {
        Self::from_geometry(FrameGeometry::build(kernels, config)?)
    }

    pub fn from_geometry(geometry: FrameGeometry<'a>) -> Result<Self> {
        Self::from_geometry_cached(geometry, None)
    }

    /// Like [`FrameOperator::build`], reading and writing the per-scale
    /// block matrices through a cache directory.
    pub fn build_cached(kernels: &'a Kernels, config: FrameConfig, cache_dir: Option<&Path>) -> Result<Self> {
        Self::from_geometry_cached(FrameGeometry::build(kernels, config)?, cache_dir)
    }

    fn from_geometry_cached(geometry: FrameGeometry<'a>, cache_dir: Option<&Path>) -> Result<Self> {
        let nodes = geometry.rule.nodes();
        let m0 = geometry.config.m0;
        let kern = geometry.kernels;
        let rule_print = geometry.rule.fingerprint();
        let block = |g: &crate::grid::DyadicGrid, variant: BlockVariant| -> Result<DMatrix<f64>> {
            let kind = KernelKind::Block { k: g.k(), variant };
            let build = || kern.matrix(kind, g.centers(), nodes);
            match cache_dir {
                None => build(),
                Some(dir) => {
                    let meta = KernelMeta::new(
                        &kern.structure().fingerprint(),
                        &serde_json::to_string(&kind).unwrap_or_default(),
                        &rule_print,
                        &format!("rows=cube centres {}", g.signature()),
                    );
                    let km = cache::load_or_build(dir, &meta, || Ok(KernelMatrix::new(build()?, meta.clone())))?;
                    Ok(km.into_data())
                }
            }
        };
        let mut analysis = Vec::new();
        let mut synthesis_t = Vec::new();
        for g in geometry.grids.grids() {
            analysis.push(block(g, BlockVariant::Plain)?);
            synthesis_t.push(block(g, BlockVariant::Widened { m0 })?);
        }
        Ok(Self {
            geometry,
            analysis,
            synthesis_t,
        })
    }

    pub fn geometry(&self) -> &FrameGeometry<'a> {
        &self.geometry
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.geometry.rule
    }

    pub fn grids(&self) -> &MultiscaleGrid {
        &self.geometry.grids
    }

    pub fn m0(&self) -> u32 {
        self.geometry.config.m0
    }

    pub fn len(&self) -> usize {
        self.geometry.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Config(format!(
                "function has {} samples, the frame has {} nodes",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    fn weighted(&self, f: &[f64]) -> DVector<f64> {
        DVector::from_iterator(f.len(), f.iter().zip(self.rule().weights()).map(|(a, w)| a * w))
    }

    /// {D_k(f)(x_Q)} on the frame grids.
    pub fn analysis(&self, f: &[f64]) -> Result<CoefficientField> {
        self.check_len(f)?;
        let wf = self.weighted(f);
        let values = self.analysis.iter().map(|a| (a * &wf).as_slice().to_vec()).collect();
        CoefficientField::new(self.grids(), values)
    }

    /// {D_k^{M0}(g)(x_Q)}.
    pub fn widened_analysis(&self, g: &[f64]) -> Result<CoefficientField> {
        self.check_len(g)?;
        let wg = self.weighted(g);
        let values = self.synthesis_t.iter().map(|s| (s * &wg).as_slice().to_vec()).collect();
        CoefficientField::new(self.grids(), values)
    }

    /// Σ_k Σ_Q ω(Q) D_k^{M0}(·, x_Q) λ_Q for scales selected by `keep`.
    pub fn synthesis_where(&self, field: &CoefficientField, keep: impl Fn(i32) -> bool) -> Vec<f64> {
        let mut out = DVector::zeros(self.len());
        for ((g, s), (k, lambda)) in self.grids().grids().iter().zip(&self.synthesis_t).zip(field.iter()) {
            if !keep(k) {
                continue;
            }
            let c = DVector::from_iterator(g.len(), lambda.iter().zip(g.measures()).map(|(l, w)| l * w));
            out += s.tr_mul(&c);
        }
        out.as_slice().to_vec()
    }

    pub fn synthesis(&self, field: &CoefficientField) -> Vec<f64> {
        self.synthesis_where(field, |_| true)
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(self.synthesis(&self.analysis(f)?))
    }

    /// Partial frame sum over scales with |k| ≤ m.
    pub fn apply_truncated(&self, f: &[f64], m: i32) -> Result<Vec<f64>> {
        Ok(self.synthesis_where(&self.analysis(f)?, |k| k.abs() <= m))
    }

    /// Adjoint of T in the ω-weighted inner product.
    pub fn apply_adjoint(&self, g: &[f64]) -> Result<Vec<f64>> {
        let field = self.widened_analysis(g)?;
        let mut out = DVector::zeros(self.len());
        for ((grid, a), (_, mu)) in self.grids().grids().iter().zip(&self.analysis).zip(field.iter()) {
            let c = DVector::from_iterator(grid.len(), mu.iter().zip(grid.measures()).map(|(l, w)| l * w));
            out += a.tr_mul(&c);
        }
        Ok(out.as_slice().to_vec())
    }

    /// Node matrix of T (acting on node values); n × n, small configs only.
    pub fn assemble(&self) -> DMatrix<f64> {
        let w = self.rule().weights();
        let mut t = DMatrix::zeros(self.len(), self.len());
        for ((g, a), s) in self.grids().grids().iter().zip(&self.analysis).zip(&self.synthesis_t) {
            let mut wa = a.clone();
            for (mut row, om) in wa.row_iter_mut().zip(g.measures()) {
                row *= *om;
            }
            for (mut col, wj) in wa.column_iter_mut().zip(w) {
                col *= *wj;
            }
            t += s.tr_mul(&wa);
        }
        t
    }

    /// ‖I − T‖ on the full discrete L²(ω) space.
    pub fn remainder_norm_full(&self, power: &PowerIteration, rng: &mut impl Rng) -> Result<f64> {
        let w = self.rule().weights().to_vec();
        let start: Vec<f64> = (0..self.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let r = power.run(
            start,
            |v| {
                let tv = self.apply(v)?;
                let rv: Vec<f64> = v.iter().zip(&tv).map(|(a, b)| a - b).collect();
                let tr = self.apply_adjoint(&rv)?;
                Ok(rv.iter().zip(&tr).map(|(a, b)| a - b).collect())
            },
            |a, b| weighted_dot(&w, a, b),
        )?;
        Ok(r.norm)
    }

    /// ‖T‖ on discrete L²(ω).
    pub fn operator_norm(&self, power: &PowerIteration, rng: &mut impl Rng) -> Result<f64> {
        let w = self.rule().weights().to_vec();
        let start: Vec<f64> = (0..self.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        Ok(power
            .run(start, |v| self.apply_adjoint(&self.apply(v)?), |a, b| weighted_dot(&w, a, b))?
            .norm)
    }
}

/// Bumps Σ_j C(m,j)(−1)^j h_{(m−j)s + jrs}(·, c): heat-semigroup differences
/// whose spectrum (e^{−s|ξ|²} − e^{−rs|ξ|²})^m is concentrated in a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub s: f64,
    pub r: f64,
    pub m: u32,
    pub spacing: f64,
    pub extent: f64,
    /// Singular values below `cutoff`·σ_max are discarded.
    pub cutoff: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            s: 1.0,
            r: 4.0,
            m: 4,
            spacing: 0.5,
            extent: 8.0,
            cutoff: 1e-8,
        }
    }
}

fn binomial(m: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// An ω-orthonormal basis of the probe span, stored as node values.
#[derive(Debug, Clone)]
pub struct ProbeSubspace {
    basis: DMatrix<f64>,
    weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
}

impl ProbeSubspace {
    pub fn build(kernels: &Kernels, rule: &QuadratureRule, spec: &ProbeSpec) -> Result<Self> {
        let n = rule.dim();
        let per_axis = (2.0 * spec.extent / spec.spacing).round() as usize + 1;
        let axis: Vec<f64> = (0..per_axis).map(|i| -spec.extent + i as f64 * spec.spacing).collect();
        let centers: Vec<Vec<f64>> = match n {
            1 => axis.iter().map(|&c| vec![c]).collect(),
            _ => axis
                .iter()
                .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
                .collect(),
        };
        let terms: Vec<(f64, f64)> = (0..=spec.m)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let t = (spec.m - j) as f64 * spec.s + j as f64 * spec.r * spec.s;
                (sign * binomial(spec.m, j), t)
            })
            .collect();
        let mut raw = DMatrix::zeros(rule.len(), centers.len());
        for (c, center) in centers.iter().enumerate() {
            for (i, x) in rule.nodes().chunks(n).enumerate() {
                let mut v = 0.0;
                for &(coef, t) in &terms {
                    v += coef * kernels.heat(t, x, center)?;
                }
                raw[(i, c)] = v;
            }
        }
        Self::from_columns(raw, rule.weights(), spec.cutoff, centers)
    }

    /// Orthonormalizes arbitrary node-valued columns in the ω inner product.
    pub fn from_columns(
        raw: DMatrix<f64>,
        weights: &[f64],
        cutoff: f64,
        centers: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let mut scaled = raw.clone();
        for (mut row, sw) in scaled.row_iter_mut().zip(&sqrt_w) {
            row *= *sw;
        }
        let svd = scaled.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::Accuracy {
            estimate: f64::NAN,
            target: cutoff,
            context: "probe SVD failed".into(),
        })?;
        let sigma = &svd.singular_values;
        let smax = sigma.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > cutoff * smax).collect();
        if keep.is_empty() {
            return Err(Error::Resolution("probe functions vanish on the quadrature".into()));
        }
        let mut basis = DMatrix::zeros(raw.nrows(), keep.len());
        for (col, &i) in keep.iter().enumerate() {
            let z = v_t.row(i).transpose() / sigma[i];
            basis.set_column(col, &(&raw * z));
        }
        Ok(Self {
            basis,
            weights: weights.to_vec(),
            centers,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Bᵀ W f
    pub fn coords(&self, f: &[f64]) -> DVector<f64> {
        let wf = DVector::from_iterator(f.len(), f.iter().zip(&self.weights).map(|(a, w)| a * w));
        self.basis.tr_mul(&wf)
    }

    pub fn lift(&self, c: &DVector<f64>) -> Vec<f64> {
        (&self.basis * c).as_slice().to_vec()
    }

    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(f))
    }

    /// A member of S with independent standard normal coordinates.
    pub fn random_member(&self, rng: &mut impl Rng) -> Vec<f64> {
        let c = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)));
        self.lift(&c)
    }
}

/// T compressed to a probe subspace: R_S = I − Bᵀ W T B.
#[derive(Debug, Clone)]
pub struct GalerkinFrame<'f, 'a> {
    frame: &'f FrameOperator<'a>,
    probe: ProbeSubspace,
    t_basis: DMatrix<f64>,
    remainder: DMatrix<f64>,
}

impl<'f, 'a> GalerkinFrame<'f, 'a> {
    pub fn new(frame: &'f FrameOperator<'a>, probe: ProbeSubspace) -> Result<Self> {
        let n = frame.len();
        if probe.basis.nrows() != n {
            return Err(Error::Config("probe subspace lives on a different quadrature".into()));
        }
        let r = probe.dim();
        let mut t_basis = DMatrix::zeros(n, r);
        for c in 0..r {
            let col: Vec<f64> = probe.basis.column(c).iter().copied().collect();
            t_basis.set_column(c, &DVector::from_vec(frame.apply(&col)?));
        }
        let mut wt = t_basis.clone();
        for (mut row, w) in wt.row_iter_mut().zip(frame.rule().weights()) {
            row *= *w;
        }
        let compressed = probe.basis.tr_mul(&wt);
        let remainder = DMatrix::identity(r, r) - compressed;
        Ok(Self {
            frame,
            probe,
            t_basis,
            remainder,
        })
    }

    pub fn frame(&self) -> &'f FrameOperator<'a> {
        self.frame
    }

    pub fn probe(&self) -> &ProbeSubspace {
        &self.probe
    }

    pub fn remainder_matrix(&self) -> &DMatrix<f64> {
        &self.remainder
    }

    /// ‖R_S‖ by power iteration.
    pub fn remainder_norm(&self, power: &PowerIteration) -> Result<f64> {
        let start: Vec<f64> = (0..self.probe.dim()).map(|i| 1.0 + 0.01 * i as f64).collect();
        Ok(power.matrix_norm(&self.remainder, start)?.norm)
    }

    /// h = Σ_{j ≤ J} R_S^j f in S coordinates.
    pub fn neumann_invert(&self, f: &[f64], order: usize, power: &PowerIteration) -> Result<NeumannInverse> {
        let norm = self.remainder_norm(power)?;
        if norm >= 1.0 {
            return Err(Error::Divergence { norm });
        }
        let fc = self.probe.coords(f);
        let (hc, residuals) = neumann_series(&self.remainder, &fc, order);
        let h = self.probe.lift(&hc);
        let th = &self.t_basis * &hc;
        let w = self.frame.rule().weights();
        let diff: Vec<f64> = f.iter().zip(th.iter()).map(|(a, b)| a - b).collect();
        let full_residual = weighted_norm(w, &diff) / weighted_norm(w, f);
        Ok(NeumannInverse {
            order,
            h,
            coords: hc.as_slice().to_vec(),
            residuals,
            remainder_norm: norm,
            full_residual,
        })
    }

    /// Partial sums of the reproducing formula over |k| ≤ m.
    pub fn reconstruct(&self, f: &[f64], inv: &NeumannInverse, spec: &NormSpec) -> Result<ReconstructionReport> {
        let frame = self.frame;
        let coeffs = frame.analysis(&inv.h)?;
        let f_coords = self.probe.coords(f);
        let f_l2 = euclidean_norm(f_coords.as_slice());
        let f_besov = besov_norm(&frame.analysis(f)?, frame.grids(), spec)?.value;
        let m_max = frame.grids().k_min().abs().max(frame.grids().k_max().abs());
        let mut rows = Vec::new();
        for m in 0..=m_max {
            let partial = frame.synthesis_where(&coeffs, |k| k.abs() <= m);
            let err: Vec<f64> = f.iter().zip(&partial).map(|(a, b)| a - b).collect();
            let ec = self.probe.coords(&err);
            let projected = self.probe.lift(&ec);
            let besov = besov_norm(&frame.analysis(&projected)?, frame.grids(), spec)?.value;
            rows.push(ReconstructionRow {
                m,
                l2_err: euclidean_norm(ec.as_slice()) / f_l2,
                besov_err: besov / f_besov,
            });
        }
        Ok(ReconstructionReport { rows })
    }
}

/// Partial sums h_J = Σ_{j ≤ J} R^j f and relative residuals ‖f − (I−R)h_j‖/‖f‖ for j = 0..=J.
pub fn neumann_series(r: &DMatrix<f64>, f: &DVector<f64>, order: usize) -> (DVector<f64>, Vec<f64>) {
    let fnorm = f.norm();
    let mut term = f.clone();
    let mut h = f.clone();
    let mut residuals = Vec::with_capacity(order + 1);
    for j in 0..=order {
        if j > 0 {
            term = r * &term;
            h += &term;
        }
        // f − (I − R)h_j = R^{j+1} f
        let res = f - (&h - r * &h);
        residuals.push(if fnorm > 0.0 { res.norm() / fnorm } else { 0.0 });
    }
    (h, residuals)
}

/// Result of Neumann inversion on the probe subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannInverse {
    pub order: usize,
    /// h on the nodes.
    pub h: Vec<f64>,
    pub coords: Vec<f64>,
    /// Relative projected residual after each partial sum.
    pub residuals: Vec<f64>,
    pub remainder_norm: f64,
    /// ‖f − T h‖/‖f‖ without projection; bounded below by the sampling ripple.
    pub full_residual: f64,
}

impl NeumannInverse {
    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("at least one partial sum")
    }

    /// Largest ratio r_{j+1}/r_j over steps whose residual is above `floor`.
    pub fn max_decay_ratio(&self, floor: f64) -> f64 {
        self.residuals
            .windows(2)
            .filter(|w| w[1] > floor)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionRow {
    pub m: i32,
    pub l2_err: f64,
    pub besov_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub rows: Vec<ReconstructionRow>,
}

impl ReconstructionReport {
    /// Both error columns non-increasing in m up to `noise`.
    pub fn is_monotone(&self, noise: f64) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].l2_err <= w[0].l2_err + noise && w[1].besov_err <= w[0].besov_err + noise
        })
    }
}

/// Outcome of the adaptive choice of M0.
#[derive(Debug, Clone)]
pub struct AdaptiveChoice<'a> {
    pub frame: FrameOperator<'a>,
    pub probe: ProbeSubspace,
    /// (M0, ‖R_S‖) for each M0 tried.
    pub history: Vec<(u32, f64)>,
}

/// Target for the adaptive search.
pub const ADAPTIVE_TARGET: f64 = 0.5;

/// Smallest M0 in `candidates` whose probe remainder norm is below 1/2.
pub fn choose_m0<'a>(
    kernels: &'a Kernels,
    base: FrameConfig,
    probe: &ProbeSpec,
    candidates: impl IntoIterator<Item = u32>,
    power: &PowerIteration,
) -> Result<AdaptiveChoice<'a>> {
    let mut history = Vec::new();
    let mut last = f64::INFINITY;
    for m0 in candidates {
        let frame = FrameOperator::build(kernels, base.with_m0(m0))?;
        let subspace = ProbeSubspace::build(kernels, frame.rule(), probe)?;
        let norm = GalerkinFrame::new(&frame, subspace.clone())?.remainder_norm(power)?;
        history.push((m0, norm));
        last = norm;
        if norm < ADAPTIVE_TARGET {
            return Ok(AdaptiveChoice {
                frame,
                probe: subspace,
                history,
            });
        }
    }
    Err(Error::Divergence { norm: last })
}

/// ⟨f, g⟩ against Σ_k Σ_Q ω(Q) D_k(h)(x_Q) D_k^{M0}(g)(x_Q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingReport {
    pub direct: f64,
    pub series: f64,
    pub absolute_sum: f64,
    pub discrepancy: f64,
}

pub fn weak_pairing_check(frame: &FrameOperator, f: &[f64], h: &[f64], g: &[f64]) -> Result<PairingReport> {
    let w = frame.rule().weights();
    frame.check_len(f)?;
    let direct = weighted_dot(w, f, g);
    let lambda = frame.analysis(h)?;
    let mu = frame.widened_analysis(g)?;
    let (mut series, mut absolute_sum) = (0.0, 0.0);
    for (grid, ((_, l), (_, m))) in frame.grids().grids().iter().zip(lambda.iter().zip(mu.iter())) {
        for ((a, b), om) in l.iter().zip(m).zip(grid.measures()) {
            series += om * a * b;
            absolute_sum += (om * a * b).abs();
        }
    }
    let scale = weighted_norm(w, f) * weighted_norm(w, g);
    let discrepancy = if scale > 0.0 { (direct - series).abs() / scale } else { 0.0 };
    Ok(PairingReport {
        direct,
        series,
        absolute_sum,
        discrepancy,
    })
}

/// Besov norms of the canonical coefficients {D_k(h)(x_Q)} and of {D_k(f)(x_Q)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfimumGap {
    pub canonical: f64,
    pub direct: f64,
}

impl InfimumGap {
    pub fn ratio(&self) -> f64 {
        if self.direct == 0.0 {
            if self.canonical == 0.0 { 1.0 } else { f64::INFINITY }
        } else {
            self.canonical / self.direct
        }
    }
}

pub fn coefficient_infimum_gap(frame: &FrameOperator, f: &[f64], h: &[f64], spec: &NormSpec) -> Result<InfimumGap> {
    let canonical = besov_norm(&frame.analysis(h)?, frame.grids(), spec)?.value;
    let direct = besov_norm(&frame.analysis(f)?, frame.grids(), spec)?.value;
    Ok(InfimumGap { canonical, direct })
}
