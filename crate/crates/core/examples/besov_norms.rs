//! Besov quasi-norms of coefficient fields, the θ-triangle inequality and
//! the L² pairing against the dual norm.

use dunkl_besov::besov::{besov_norm, dual_params, duality_pairing, BesovParams};
use dunkl_besov::frame::{FrameConfig, FrameOperator, ProbeSpec, ProbeSubspace};
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::kernels::Kernels;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::rank_one(1.0)?;
    let k = Kernels::new(s.clone())?;
    let frame = FrameOperator::build(&k, FrameConfig::default())?;
    let probe = ProbeSubspace::build(&k, frame.rule(), &ProbeSpec::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = probe.random_member(&mut rng);
    let g = probe.random_member(&mut rng);
    let (fa, ga) = (frame.analysis(&f)?, frame.analysis(&g)?);

    for (alpha, p, q) in [(0.3, 2.0, 2.0), (0.3, 1.0, 1.0), (0.3, 0.9, 0.8), (-0.5, 4.0, 1.5)] {
        let params = BesovParams::new(alpha, p, q, s.homogeneous_dim())?;
        let spec = params.spec();
        let nf = besov_norm(&fa, frame.grids(), &spec)?;
        let ng = besov_norm(&ga, frame.grids(), &spec)?.value;
        let nsum = besov_norm(&fa.add(&ga)?, frame.grids(), &spec)?.value;
        let theta = spec.theta();
        println!(
            "α={alpha:<4} p={p:<3} q={q:<3} ‖f‖={:.4e}  boundary={:.2e}  θ-triangle {:.4} ≤ {:.4}",
            nf.value,
            nf.boundary_term,
            nsum.powf(theta),
            nf.value.powf(theta) + ng.powf(theta)
        );
        let dual = dual_params(&params).spec();
        let pairing = duality_pairing(&f, &g, frame.rule())?;
        let bound = nf.value * besov_norm(&ga, frame.grids(), &dual)?.value;
        println!("      |⟨f, g⟩| / (‖f‖·‖g‖_dual) = {:.4}", pairing.abs() / bound);
    }
    Ok(())
}
