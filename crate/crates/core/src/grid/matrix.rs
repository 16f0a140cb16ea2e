use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::hex;
use crate::grid::{DyadicGrid, QuadratureRule};

/// Provenance of a kernel matrix: what was evaluated, where, and how.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub structure: String,
    pub kind: String,
    pub rule: String,
    pub params: String,
}

impl KernelMeta {
    pub fn new(structure: &str, kind: &str, rule: &str, params: &str) -> Self {
        Self {
            structure: structure.to_owned(),
            kind: kind.to_owned(),
            rule: rule.to_owned(),
            params: params.to_owned(),
        }
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.structure, &self.kind, &self.rule, &self.params] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex(&h.finalize())
    }
}

/// Kernel values with rows and columns indexed by nodes or cube centers.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    data: DMatrix<f64>,
    meta: KernelMeta,
}

impl KernelMatrix {
    pub fn new(data: DMatrix<f64>, meta: KernelMeta) -> Self {
        Self { data, meta }
    }

    /// Row Q holds 1/w_j at the node nearest to x_Q, so sampling returns f there.
    pub fn nearest_node_delta(grid: &DyadicGrid, rule: &QuadratureRule) -> Self {
        let mut data = DMatrix::zeros(grid.len(), rule.len());
        for q in 0..grid.len() {
            let c = grid.center(q);
            let (j, _) = rule
                .nodes()
                .chunks(rule.dim())
                .map(|x| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("rule has nodes");
            data[(q, j)] = 1.0 / rule.weights()[j];
        }
        let meta = KernelMeta::new("any", "delta", &rule.fingerprint(), &grid.signature());
        Self { data, meta }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn meta(&self) -> &KernelMeta {
        &self.meta
    }

    pub fn hash(&self) -> String {
        self.meta.hash()
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }
}

/// {∫ K(x_Q, y) f(y) dω(y)}_Q with K sampled at cube centers × nodes.
pub fn sample_operator(
    k: &KernelMatrix,
    f: &[f64],
    grid: &DyadicGrid,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    if k.meta.rule != rule.fingerprint() || k.cols() != rule.len() {
        return Err(Error::Config("kernel matrix was built on a different quadrature".into()));
    }
    if k.rows() != grid.len() {
        return Err(Error::Config(format!(
            "kernel has {} rows for {} cubes",
            k.rows(),
            grid.len()
        )));
    }
    if f.len() != rule.len() {
        return Err(Error::Config(format!(
            "function has {} samples for {} nodes",
            f.len(),
            rule.len()
        )));
    }
    let wf: Vec<f64> = f.iter().zip(rule.weights()).map(|(a, w)| a * w).collect();
    Ok((0..k.rows())
        .into_par_iter()
        .map(|q| k.data.row(q).iter().zip(&wf).map(|(a, b)| a * b).sum())
        .collect())
}
