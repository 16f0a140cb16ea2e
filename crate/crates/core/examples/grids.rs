//! Weighted quadrature, dyadic cube families and the kernel-matrix cache.

use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::grid::{cache, MultiscaleGrid, QuadratureRule, UniformSpec};
use dunkl_besov::kernels::{BlockVariant, Kernels};

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::product(&[0.5, 1.0])?;
    let rule = QuadratureRule::uniform(&s, UniformSpec { half_width: 2.0, cell_width: 0.125, order: 2 })?;
    println!("2-D rule: {} nodes, total weight {:.10}", rule.len(), rule.total_weight());
    println!("ball volume at (1, 1), r = 0.5: quadrature {:.6}, semianalytic {:.6}",
        s.ball_volume(&rule, &[1.0, 1.0], 0.5)?,
        s.ball_volume_semianalytic(&[1.0, 1.0], 0.5));

    let grids = MultiscaleGrid::build(-1, 1, 1, 2.0, &rule)?;
    for g in grids.grids() {
        let (lo, hi) = g.measures().iter().fold((f64::MAX, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
        println!("k = {:>2}: {:>4} cubes of side {:<6} ω(Q) ∈ [{lo:.3e}, {hi:.3e}]", g.k(), g.len(), g.side());
    }

    let k = Kernels::new(s.clone())?;
    let dir = std::env::temp_dir().join("dunkl-besov-grids-example");
    let small = QuadratureRule::uniform(&s, UniformSpec { half_width: 1.0, cell_width: 0.25, order: 2 })?;
    let built = k.block_kernel(0, BlockVariant::Plain, &small)?;
    let path = cache::store(&built, &dir)?;
    let loaded = cache::load(&path, &built.hash())?;
    println!("cache round trip through {}: identical = {}", path.display(), loaded.data() == built.data());
    for outcome in cache::verify(&dir)? {
        println!("verify {}: {}", outcome.path.display(), outcome.ok);
    }
    cache::purge(&dir)?;
    Ok(())
}
