//! Choose M0 adaptively, invert the frame operator by a Neumann series and
//! watch the truncated reconstruction converge.

use dunkl_besov::besov::NormSpec;
use dunkl_besov::frame::{choose_m0, FrameConfig, GalerkinFrame, ProbeSpec};
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::kernels::Kernels;
use dunkl_besov::linalg::PowerIteration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dunkl_besov::Result<()> {
    let k = Kernels::new(DunklStructure::rank_one(1.0)?)?;
    let power = PowerIteration::default();
    let choice = choose_m0(&k, FrameConfig::default(), &ProbeSpec::default(), 1..=4, &power)?;
    for (m0, norm) in &choice.history {
        println!("M0 = {m0}: ‖R‖ on probe subspace = {norm:.4}");
    }
    println!("chose M0 = {}", choice.frame.m0());

    let galerkin = GalerkinFrame::new(&choice.frame, choice.probe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = galerkin.probe().random_member(&mut rng);
    let inv = galerkin.neumann_invert(&f, 30, &power)?;
    for (j, r) in inv.residuals.iter().enumerate().step_by(5) {
        println!("J = {j:>2}: residual {r:.3e}");
    }
    println!("worst residual decay ratio {:.3}", inv.max_decay_ratio(1e-13));

    let report = galerkin.reconstruct(&f, &inv, &NormSpec::new(0.3, 2.0, 2.0)?)?;
    for row in &report.rows {
        println!("m = {}: L² error {:.3e}, Besov error {:.3e}", row.m, row.l2_err, row.besov_err);
    }
    println!("monotone: {}", report.is_monotone(1e-12));
    Ok(())
}
