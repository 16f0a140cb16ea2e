use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::hex;
use crate::grid::QuadratureRule;

/// Dyadic cubes of side 2^{−k−M0} tiling [−L, L]ⁿ, with ω(Q) from the rule.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicGrid {
    k: i32,
    m0: u32,
    side: f64,
    half_width: f64,
    dim: usize,
    per_axis: usize,
    centers: Vec<f64>,
    measures: Vec<f64>,
    node_cube: Vec<Option<usize>>,
}

/// Cubes of side 2^{−k−M0} on [−L, L]ⁿ. L is rounded up to a multiple of the
/// side; every cube must contain at least one node.
pub fn build_grid(k: i32, m0: u32, half_width: f64, rule: &QuadratureRule) -> Result<DyadicGrid> {
    DyadicGrid::build(k, m0, half_width, rule, false)
}

impl DyadicGrid {
    /// With `allow_outside`, nodes beyond the tiled box belong to no cube
    /// (useful with graded rules whose tails extend far past the grid).
    pub fn build(k: i32, m0: u32, half_width: f64, rule: &QuadratureRule, allow_outside: bool) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Config(format!("grid half-width must be positive, got {half_width}")));
        }
        let side = (2.0f64).powi(-k - m0 as i32);
        let half_cubes = (half_width / side - 1e-9).ceil().max(1.0);
        let l = half_cubes * side;
        let per_axis = 2 * half_cubes as usize;
        let dim = rule.dim();
        let total = per_axis.pow(dim as u32);

        let mut measures = vec![0.0; total];
        let mut node_cube = Vec::with_capacity(rule.len());
        for (x, w) in rule.iter() {
            let mut idx = 0usize;
            let mut inside = true;
            for &xi in x {
                let j = ((xi + l) / side).floor();
                if j < 0.0 || j >= per_axis as f64 {
                    inside = false;
                    break;
                }
                idx = idx * per_axis + j as usize;
            }
            if inside {
                measures[idx] += w;
                node_cube.push(Some(idx));
            } else if allow_outside {
                node_cube.push(None);
            } else {
                return Err(Error::Config(format!(
                    "quadrature node {x:?} lies outside the grid box [−{l}, {l}]"
                )));
            }
        }
        if let Some(q) = measures.iter().position(|&m| m <= 0.0) {
            return Err(Error::Resolution(format!(
                "cube {q} at scale k={k} (side {side:e}) contains no quadrature node"
            )));
        }

        let mut centers = Vec::with_capacity(total * dim);
        for q in 0..total {
            let mut rem = q;
            let mut c = vec![0.0; dim];
            for ci in c.iter_mut().rev() {
                *ci = -l + side * ((rem % per_axis) as f64 + 0.5);
                rem /= per_axis;
            }
            centers.extend(c);
        }
        Ok(Self {
            k,
            m0,
            side,
            half_width: l,
            dim,
            per_axis,
            centers,
            measures,
            node_cube,
        })
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, q: usize) -> &[f64] {
        &self.centers[q * self.dim..(q + 1) * self.dim]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn measure(&self, q: usize) -> f64 {
        self.measures[q]
    }

    /// Cube containing quadrature node j, if any.
    pub fn node_cube(&self, j: usize) -> Option<usize> {
        self.node_cube[j]
    }

    pub fn node_count(&self) -> usize {
        self.node_cube.len()
    }

    /// Cube containing a point of the tiled box.
    pub fn cube_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for &xi in x {
            let j = ((xi + self.half_width) / self.side).floor();
            if j < 0.0 || j >= self.per_axis as f64 {
                return None;
            }
            idx = idx * self.per_axis + j as usize;
        }
        Some(idx)
    }

    /// Identifies the cube layout: scale, side, box and cube measures.
    pub fn signature(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.k.to_le_bytes());
        h.update(self.m0.to_le_bytes());
        h.update(self.half_width.to_le_bytes());
        for m in &self.measures {
            h.update(m.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

/// One dyadic grid per scale k ∈ [k_min, k_max], all built on the same rule.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleGrid {
    k_min: i32,
    m0: u32,
    grids: Vec<DyadicGrid>,
}

impl MultiscaleGrid {
    pub fn build(k_min: i32, k_max: i32, m0: u32, half_width: f64, rule: &QuadratureRule) -> Result<Self> {
        Self::build_with(k_min, k_max, m0, half_width, rule, false)
    }

    pub fn build_with(
        k_min: i32,
        k_max: i32,
        m0: u32,
        half_width: f64,
        rule: &QuadratureRule,
        allow_outside: bool,
    ) -> Result<Self> {
        // k_max < k_min yields an empty family (no scales at all).
        let grids = (k_min..=k_max)
            .map(|k| DyadicGrid::build(k, m0, half_width, rule, allow_outside))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k_min, m0, grids })
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.grids.len() as i32 - 1
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> + '_ {
        self.k_min..=self.k_max()
    }

    pub fn grids(&self) -> &[DyadicGrid] {
        &self.grids
    }

    pub fn grid(&self, k: i32) -> Option<&DyadicGrid> {
        usize::try_from(k - self.k_min).ok().and_then(|i| self.grids.get(i))
    }

    /// Total number of cubes over all scales.
    pub fn total_cubes(&self) -> usize {
        self.grids.iter().map(DyadicGrid::len).sum()
    }

    pub fn signature(&self) -> String {
        let mut h = Sha256::new();
        for g in &self.grids {
            h.update(g.signature().as_bytes());
        }
        hex(&h.finalize())
    }
}

/// Multiscale coefficients {λ_Q}, one vector per scale matching a grid family.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    k_min: i32,
    values: Vec<Vec<f64>>,
}

impl CoefficientField {
    pub fn new(grids: &MultiscaleGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != grids.grids().len() {
            return Err(Error::Config(format!(
                "field has {} scales, grids have {}",
                values.len(),
                grids.grids().len()
            )));
        }
        for (g, v) in grids.grids().iter().zip(&values) {
            if v.len() != g.len() {
                return Err(Error::Config(format!(
                    "scale {} has {} coefficients for {} cubes",
                    g.k(),
                    v.len(),
                    g.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Param(format!("non-finite coefficient at scale {}", g.k())));
            }
        }
        Ok(Self {
            k_min: grids.k_min(),
            values,
        })
    }

    pub fn zeros(grids: &MultiscaleGrid) -> Self {
        Self {
            k_min: grids.k_min(),
            values: grids.grids().iter().map(|g| vec![0.0; g.len()]).collect(),
        }
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn scale_count(&self) -> usize {
        self.values.len()
    }

    pub fn scale(&self, k: i32) -> Option<&[f64]> {
        usize::try_from(k - self.k_min)
            .ok()
            .and_then(|i| self.values.get(i))
            .map(Vec::as_slice)
    }

    pub fn scale_mut(&mut self, k: i32) -> Option<&mut Vec<f64>> {
        usize::try_from(k - self.k_min).ok().and_then(|i| self.values.get_mut(i))
    }

    /// (k, coefficients) pairs in increasing k.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &[f64])> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.k_min + i as i32, v.as_slice()))
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec<f64>> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            k_min: self.k_min,
            values: self.values.iter().map(|v| v.iter().map(|&x| f(x)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.k_min != other.k_min || self.values.len() != other.values.len() {
            return Err(Error::Config("coefficient fields index different scales".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                if a.len() != b.len() {
                    return Err(Error::Config("coefficient fields index different cubes".into()));
                }
                Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            k_min: self.k_min,
            values,
        })
    }

    /// Keeps only scales with |k| ≤ m.
    pub fn truncated(&self, m: i32) -> Self {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            if (self.k_min + i as i32).abs() > m {
                v.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DunklStructure;
    use crate::grid::build_quadrature;

    #[test]
    fn two_unit_cubes() {
        let s = DunklStructure::rank_one(1.0).unwrap();
        let q = build_quadrature(&s, 1.0, 64).unwrap();
        let g = build_grid(0, 0, 1.0, &q).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.center(0), &[-0.5]);
        assert_eq!(g.center(1), &[0.5]);
        let total: f64 = g.measures().iter().sum();
        assert!((total - q.total_weight()).abs() < 1e-14);
    }

    #[test]
    fn refinement_is_additive() {
        let s = DunklStructure::product(&[0.5, 1.0]).unwrap();
        let q = build_quadrature(&s, 2.0, 64).unwrap();
        let coarse = build_grid(0, 1, 2.0, &q).unwrap();
        let fine = build_grid(1, 1, 2.0, &q).unwrap();
        let mut sums = vec![0.0; coarse.len()];
        for c in 0..fine.len() {
            let p = coarse.cube_of(fine.center(c)).unwrap();
            sums[p] += fine.measure(c);
        }
        for (a, b) in sums.iter().zip(coarse.measures()) {
            assert!((a / b - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn too_fine_is_a_resolution_error() {
        let s = DunklStructure::rank_one(0.0).unwrap();
        let q = build_quadrature(&s, 1.0, 64).unwrap();
        assert!(matches!(build_grid(6, 2, 1.0, &q), Err(Error::Resolution(_))));
    }
}
