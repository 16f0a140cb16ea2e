//! Schur-type bound for a coefficient map built from composite kernels,
//! mixing source and target grids with different M0.

use std::collections::HashMap;

use dunkl_besov::besov::{schur_bound_test, NormSpec, SchurFamily, SchurHypothesis};
use dunkl_besov::czo::CompositeSchur;
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::grid::{CoefficientField, GradedSpec, MultiscaleGrid, QuadratureRule, UniformSpec};
use dunkl_besov::kernels::Kernels;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::rank_one(1.0)?;
    let k = Kernels::new(s.clone())?;
    let rule = QuadratureRule::uniform(&s, UniformSpec { half_width: 8.0, cell_width: 1.0 / 32.0, order: 2 })?;
    let z = QuadratureRule::graded(&s, GradedSpec { core_half_width: 10.0, core_cell: 1.0 / 32.0, order: 4, outer_radius: 1e8, growth: 1.25 })?;
    let hyp = SchurHypothesis { spec: NormSpec::new(0.1, 2.0, 2.0)?, eps: 0.25, theta: 0.95, homogeneous_dim: s.homogeneous_dim() };
    let source = MultiscaleGrid::build(-1, 1, 1, 8.0, &rule)?;
    let target = MultiscaleGrid::build(-1, 1, 2, 8.0, &rule)?;
    let family = CompositeSchur { kernels: &k, rule: &z, source: &source, target: &target, m0: 1 };

    let mut blocks = HashMap::new();
    for a in target.scales() {
        for b in source.scales() {
            blocks.insert((a, b), family.block(a, b)?);
        }
    }
    let cached = |a: i32, b: i32| Ok(blocks[&(a, b)].clone());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let values = source
            .grids()
            .iter()
            .map(|g| {
                let scale = (2.0f64).powf(rng.gen_range(-3.0..3.0));
                (0..g.len()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
            })
            .collect();
        let field = CoefficientField::new(&source, values)?;
        worst = worst.max(schur_bound_test(&cached, &field, &source, &target, &hyp)?.ratio);
    }
    println!("worst ‖Tλ‖ / ‖λ‖ over 20 fields: {worst:.4}");
    Ok(())
}
