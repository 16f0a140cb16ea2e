//! Besov boundedness of the frame remainder R_{M0} = I − T_{M0} as M0 grows.

use dunkl_besov::besov::BesovParams;
use dunkl_besov::czo::{besov_boundedness_experiment, BoundednessCase, RemainderOperator};
use dunkl_besov::frame::{FrameConfig, FrameOperator, ProbeSpec, ProbeSubspace};
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::kernels::Kernels;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::rank_one(1.0)?;
    let k = Kernels::new(s.clone())?;
    let params = BesovParams::new(0.1, 2.0, 2.0, s.homogeneous_dim())?;
    for m0 in 1..=2 {
        let frame = FrameOperator::build(&k, FrameConfig::default().with_m0(m0))?;
        let probe = ProbeSubspace::build(&k, frame.rule(), &ProbeSpec::default())?;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inputs: Vec<Vec<f64>> = (0..3).map(|_| probe.random_member(&mut rng)).collect();
        let op = RemainderOperator { frame: &frame, epsilon: 0.25 };
        let rep = besov_boundedness_experiment(&op, &frame, &params, BoundednessCase::III, &inputs)?;
        println!("M0 = {m0}: max ‖Rf‖ / ‖f‖ = {:.4}", rep.max_ratio);
    }
    let bad = BesovParams::new(0.9, 2.0, 2.0, s.homogeneous_dim())?;
    if let Err(e) = BoundednessCase::III.validate(&bad, 0.25) {
        println!("rejected: {e}");
    }
    Ok(())
}
