use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{axis_weight, hex, DunklStructure};

/// Nodes per axis below which `build_quadrature` refuses to build.
pub const MIN_COUNT: usize = 64;

/// One-dimensional composite rule with the axis density folded into the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    edges: Vec<f64>,
}

impl AxisRule {
    /// Gauss–Legendre of the given order on every cell; cells with an
    /// endpoint on the hyperplane s = 0 use Gauss–Jacobi so that |s|^{2κ}
    /// is integrated exactly.
    pub fn from_edges(kappa: f64, edges: Vec<f64>, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("cell edges must be strictly increasing".into()));
        }
        let deg = NonZeroUsize::new(order).expect("order > 0");
        let gl = GaussLegendre::new(deg);
        let jacobi = if kappa > 0.0 {
            let beta = FiniteAboveNegOneF64::new(2.0 * kappa)
                .ok_or_else(|| Error::Param(format!("invalid multiplicity {kappa}")))?;
            Some(GaussJacobi::new(deg, FiniteAboveNegOneF64::new(0.0).unwrap(), beta))
        } else {
            None
        };
        let mut nodes = Vec::with_capacity(order * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            match (&jacobi, a == 0.0, b == 0.0) {
                (Some(j), true, _) | (Some(j), _, true) => {
                    // Map s ∈ [−1,1] so that s = −1 sits on the hyperplane.
                    let scale = (2.0f64).powf(kappa) * half.powf(2.0 * kappa) * half;
                    let mut cell: Vec<(f64, f64)> = j
                        .as_node_weight_pairs()
                        .iter()
                        .map(|&(s, wt)| {
                            let r = half * (1.0 + s);
                            (if a == 0.0 { r } else { -r }, wt * scale)
                        })
                        .collect();
                    cell.sort_by(|p, q| p.0.total_cmp(&q.0));
                    for (x, wt) in cell {
                        nodes.push(x);
                        weights.push(wt);
                    }
                }
                _ => {
                    let mid = 0.5 * (a + b);
                    for &(s, wt) in gl.as_node_weight_pairs() {
                        let x = mid + half * s;
                        nodes.push(x);
                        weights.push(wt * half * axis_weight(kappa, x));
                    }
                }
            }
        }
        Ok(Self {
            nodes,
            weights,
            edges,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }
}

/// Uniform cells of a given width on [−L, L].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformSpec {
    pub half_width: f64,
    pub cell_width: f64,
    pub order: usize,
}

impl UniformSpec {
    /// Same domain, cells halved.
    pub fn refined(self) -> Self {
        Self {
            cell_width: 0.5 * self.cell_width,
            ..self
        }
    }
}

/// A uniform core of fine cells on [−c, c] followed by geometrically growing
/// cells out to `outer_radius`. Suited to kernels with slowly decaying tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradedSpec {
    pub core_half_width: f64,
    pub core_cell: f64,
    pub order: usize,
    pub outer_radius: f64,
    pub growth: f64,
}

/// How the rule was laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RuleLayout {
    Uniform(UniformSpec),
    Graded(GradedSpec),
    /// Caller-supplied cell edges per axis.
    Custom,
}

/// Tensor-product rule for ∫·dω on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    layout: RuleLayout,
    axes: Vec<AxisRule>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `count` nodes per axis on [−L, L] with 4-point cells.
pub fn build_quadrature(s: &DunklStructure, half_width: f64, count: usize) -> Result<QuadratureRule> {
    if count < MIN_COUNT {
        return Err(Error::Config(format!(
            "quadrature needs at least {MIN_COUNT} nodes per axis, got {count}"
        )));
    }
    if !(half_width > 0.0) {
        return Err(Error::Config(format!("half-width must be positive, got {half_width}")));
    }
    const ORDER: usize = 4;
    if !count.is_multiple_of(2 * ORDER) {
        return Err(Error::Config(format!(
            "node count per axis must be a multiple of {}, got {count}",
            2 * ORDER
        )));
    }
    let cells = count / ORDER;
    QuadratureRule::uniform(
        s,
        UniformSpec {
            half_width,
            cell_width: 2.0 * half_width / cells as f64,
            order: ORDER,
        },
    )
}

impl QuadratureRule {
    pub fn uniform(s: &DunklStructure, spec: UniformSpec) -> Result<Self> {
        let cells_f = 2.0 * spec.half_width / spec.cell_width;
        let cells = cells_f.round() as usize;
        if !(spec.half_width > 0.0 && spec.cell_width > 0.0) || (cells_f - cells as f64).abs() > 1e-9 || !cells.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "cell width {} must split [−{L}, {L}] into an even number of cells",
                spec.cell_width,
                L = spec.half_width
            )));
        }
        let edges: Vec<f64> = (0..=cells)
            .map(|j| {
                let e = -spec.half_width + j as f64 * spec.cell_width;
                if j == cells / 2 { 0.0 } else { e }
            })
            .collect();
        let axes = (0..s.dim())
            .map(|i| AxisRule::from_edges(s.axis_kappa(i), edges.clone(), spec.order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::tensor(RuleLayout::Uniform(spec), axes))
    }

    pub fn graded(s: &DunklStructure, spec: GradedSpec) -> Result<Self> {
        if !(spec.growth > 1.0 && spec.core_cell > 0.0 && spec.outer_radius > spec.core_half_width) {
            return Err(Error::Config("graded rule needs growth > 1 and outer radius beyond the core".into()));
        }
        let core_cells = (spec.core_half_width / spec.core_cell).round() as usize;
        let mut right: Vec<f64> = (0..=core_cells).map(|j| j as f64 * spec.core_cell).collect();
        let mut width = spec.core_cell;
        let mut edge = *right.last().unwrap();
        while edge < spec.outer_radius {
            width *= spec.growth;
            edge = (edge + width).min(spec.outer_radius);
            right.push(edge);
        }
        let mut edges: Vec<f64> = right.iter().skip(1).rev().map(|e| -e).collect();
        edges.extend_from_slice(&right);
        let axes = (0..s.dim())
            .map(|i| AxisRule::from_edges(s.axis_kappa(i), edges.clone(), spec.order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::tensor(RuleLayout::Graded(spec), axes))
    }

    /// Tensor product of prebuilt axis rules; at most two axes.
    pub fn from_axes(axes: Vec<AxisRule>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Unsupported(format!("rules in dimension {} are not supported", axes.len())));
        }
        Ok(Self::tensor(RuleLayout::Custom, axes))
    }

    fn tensor(layout: RuleLayout, axes: Vec<AxisRule>) -> Self {
        let dim = axes.len();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                nodes = axes[0].nodes.clone();
                weights = axes[0].weights.clone();
            }
            _ => {
                for (x0, w0) in axes[0].nodes.iter().zip(&axes[0].weights) {
                    for (x1, w1) in axes[1].nodes.iter().zip(&axes[1].weights) {
                        nodes.push(*x0);
                        nodes.push(*x1);
                        weights.push(w0 * w1);
                    }
                }
            }
        }
        Self {
            dim,
            layout,
            axes,
            nodes,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> RuleLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Flat node coordinates with stride `dim`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axis(&self, i: usize) -> &AxisRule {
        &self.axes[i]
    }

    /// Extent of the rule along axis i.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let e = &self.axes[i].edges;
        (e[0], e[e.len() - 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes
            .chunks(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Σ w_j f(x_j).
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Same layout with every cell halved; only uniform rules refine.
    pub fn refined(&self, s: &DunklStructure) -> Result<Self> {
        match self.layout {
            RuleLayout::Uniform(spec) => Self::uniform(s, spec.refined()),
            RuleLayout::Graded(_) | RuleLayout::Custom => Err(Error::Config("only uniform rules are refined".into())),
        }
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for v in self.nodes.iter().chain(&self.weights) {
            h.update(v.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::axis_mass;

    #[test]
    fn lebesgue_total_weight() {
        let s = DunklStructure::rank_one(0.0).unwrap();
        let q = build_quadrature(&s, 1.0, 64).unwrap();
        assert!((q.total_weight() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_total_matches_antiderivative() {
        for k in [0.5, 1.0, 1.3] {
            let s = DunklStructure::rank_one(k).unwrap();
            let q = build_quadrature(&s, 3.0, 96).unwrap();
            let exact = axis_mass(k, -3.0, 3.0);
            let tol = if k == 1.3 { 1e-9 } else { 1e-12 };
            assert!((q.total_weight() / exact - 1.0).abs() < tol, "κ={k}: {}", q.total_weight() / exact - 1.0);
        }
    }

    #[test]
    fn weights_are_even() {
        let s = DunklStructure::rank_one(0.7).unwrap();
        let q = build_quadrature(&s, 2.0, 64).unwrap();
        let n = q.len();
        for i in 0..n {
            assert!((q.node(i)[0] + q.node(n - 1 - i)[0]).abs() < 1e-14);
            assert!((q.weights()[i] - q.weights()[n - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_nodes_is_a_config_error() {
        let s = DunklStructure::rank_one(1.0).unwrap();
        assert!(matches!(build_quadrature(&s, 1.0, 32), Err(Error::Config(_))));
    }

    #[test]
    fn graded_rule_reaches_outer_radius() {
        let s = DunklStructure::rank_one(1.0).unwrap();
        let spec = GradedSpec {
            core_half_width: 2.0,
            core_cell: 0.25,
            order: 6,
            outer_radius: 1e6,
            growth: 1.5,
        };
        let q = QuadratureRule::graded(&s, spec).unwrap();
        assert_eq!(q.bounds(0), (-1e6, 1e6));
        let moment = q.integrate(|x| (-x[0] * x[0] / 2.0).exp());
        assert!((moment / s.c_kappa() - 1.0).abs() < 1e-10);
    }
}
