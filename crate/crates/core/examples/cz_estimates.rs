//! Size and smoothness constants of Calderón–Zygmund kernels, and molecule
//! checks for single-scale blocks.

use dunkl_besov::czo::{check_cz_estimates, check_molecule, BlockCz, CzSampler, HeatCz, MoleculeSampling};
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::grid::{GradedSpec, QuadratureRule};
use dunkl_besov::kernels::{BlockVariant, Kernels};

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::rank_one(1.0)?;
    let k = Kernels::new(s.clone())?;
    let probes = CzSampler { pairs: 200, region: 6.0, d_min: 0.25, d_max: 4.0, seed: 9, snap: None }.draw(&s)?;

    for kk in [-1, 0, 1] {
        let est = check_cz_estimates(&BlockCz { kernels: &k, k: kk, variant: BlockVariant::Plain, epsilon: 0.25 }, &s, &probes, None)?;
        println!("D_{kk:<2} size {:.3}  x-regularity {:.3}  y-regularity {:.3}", est.size_const, est.reg_x_const, est.reg_y_const);
    }
    let est = check_cz_estimates(&HeatCz { kernels: &k, t: 1.0, epsilon: 0.25 }, &s, &probes, None)?;
    println!("h_1  kernel constant {:.3}", est.kernel_const());

    let rule = QuadratureRule::graded(&s, GradedSpec { core_half_width: 4.0, core_cell: 1.0 / 32.0, order: 4, outer_radius: 1e9, growth: 1.25 })?;
    let sampling = MoleculeSampling { points: 200, region: 6.0, seed: 5 };
    let x0 = [0.7];
    for kk in [-1, 0, 1] {
        let block = |x: &[f64]| k.block(kk, BlockVariant::Plain, x, &x0);
        let r = check_molecule(&block, &s, kk, &x0, 0.5, &rule, &sampling)?;
        let heat = |x: &[f64]| k.heat((2.0f64).powi(-2 * kk), x, &x0);
        let h = check_molecule(&heat, &s, kk, &x0, 0.5, &rule, &sampling)?;
        println!(
            "k = {kk:<2} D_k molecule: size {:.2} regularity {:.2} cancellation {:.1e}; heat cancellation {:.3}",
            r.size_ratio, r.regularity_ratio, r.cancellation_defect, h.cancellation_defect
        );
    }
    Ok(())
}
