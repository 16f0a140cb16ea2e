//! Almost-orthogonality: decay of composite blocks D_k^{M0} D_{k'} in |k − k'|.

use dunkl_besov::czo::{ortho_decay, BlockComposite};
use dunkl_besov::experiments::{decay_pairs, decay_setup};
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::kernels::Kernels;

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::rank_one(1.0)?;
    let k = Kernels::new(s.clone())?;
    let radius = 4;
    let (points, rule) = decay_setup(&s, radius)?;
    let family = BlockComposite { kernels: &k, rule: &rule, points, m0: 1 };
    let fit = ortho_decay(&family, &s, &decay_pairs(radius), 0.125)?;
    for (gap, v) in &fit.per_gap {
        println!("|k − k'| = {gap}: log₂ max = {v:.3}");
    }
    println!("fitted slope {:.3} per unit gap", fit.slope);
    Ok(())
}
