//! Integral laws every kernel family must obey: unit mass for h_t and P_t,
//! vanishing mass for the blocks, and the semigroup property.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{KernelKind, Kernels};
use crate::error::Result;
use crate::grid::QuadratureRule;

/// Worst |∫ K(x,y) dω(y) − m| and |∫ K(y,x) dω(y) − m| over the points,
/// where m = 1 for h_t and P_t and 0 for the blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassDefect {
    pub row: f64,
    pub column: f64,
}

impl MassDefect {
    pub fn max(&self) -> f64 {
        self.row.max(self.column)
    }
}

fn expected_mass(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::Heat { .. } | KernelKind::Poisson { .. } => 1.0,
        KernelKind::Block { .. } => 0.0,
    }
}

pub fn mass_defect(kernels: &Kernels, kind: KernelKind, rule: &QuadratureRule, points: &[f64]) -> Result<MassDefect> {
    let n = rule.dim();
    let target = expected_mass(kind);
    let per_point: Vec<(f64, f64)> = points
        .par_chunks(n)
        .map(|x| {
            let (mut row, mut col) = (0.0, 0.0);
            for (y, w) in rule.iter() {
                row += w * kernels.eval(kind, x, y)?;
                col += w * kernels.eval(kind, y, x)?;
            }
            Ok(((row - target).abs(), (col - target).abs()))
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().fold(MassDefect { row: 0.0, column: 0.0 }, |acc, (r, c)| MassDefect {
        row: acc.row.max(r),
        column: acc.column.max(c),
    }))
}

/// ‖K_s ∘ K_t − K_{s+t}‖_F / ‖K_{s+t}‖_F on the points, the composition
/// integrated on `rule`. Only heat and Poisson kernels form semigroups.
pub fn semigroup_error(
    kernels: &Kernels,
    family: fn(f64) -> KernelKind,
    s: f64,
    t: f64,
    rule: &QuadratureRule,
    points: &[f64],
) -> Result<f64> {
    let left = kernels.matrix(family(s), points, rule.nodes())?;
    let mut right: DMatrix<f64> = kernels.matrix(family(t), rule.nodes(), points)?;
    for (mut row, w) in right.row_iter_mut().zip(rule.weights()) {
        row *= *w;
    }
    let composed = left * right;
    let direct = kernels.matrix(family(s + t), points, points)?;
    Ok((composed - &direct).norm() / direct.norm())
}

/// Evenly spaced subset of the rule's nodes with every coordinate in [−r, r].
pub fn interior_points(rule: &QuadratureRule, r: f64, count: usize) -> Vec<f64> {
    let inside: Vec<&[f64]> = rule
        .nodes()
        .chunks(rule.dim())
        .filter(|x| x.iter().all(|v| v.abs() <= r))
        .collect();
    let stride = (inside.len() / count.max(1)).max(1);
    inside.into_iter().step_by(stride).take(count).flatten().copied().collect()
}
