//! Dunkl kernel, heat and Poisson kernels, and their integral laws.

use dunkl_besov::experiments::law_rule;
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::kernels::laws::{interior_points, mass_defect, semigroup_error};
use dunkl_besov::kernels::{BlockVariant, KernelKind, Kernels};

fn main() -> dunkl_besov::Result<()> {
    let s = DunklStructure::rank_one(1.0)?;
    let k = Kernels::new(s.clone())?;

    let (x, y) = ([0.7], [-1.2]);
    println!("E_κ(x, y)        = {:.12}", k.dunkl_kernel(&x, &y));
    println!("h_1(x, y)        = {:.12}", k.heat(1.0, &x, &y)?);
    println!("P_1(x, y)        = {:.12}", k.poisson(1.0, &x, &y)?);
    println!("P_1 via integral = {:.12}", k.poisson_direct(1.0, &x, &y)?);
    println!("D_0(x, y)        = {:.12}", k.block(0, BlockVariant::Plain, &x, &y)?);

    let rule = law_rule(&s)?;
    let points = interior_points(&rule, 2.0, 16);
    println!("\nlaw rule: {} nodes", rule.len());
    for t in [0.25, 1.0, 4.0] {
        let heat = mass_defect(&k, KernelKind::Heat { t }, &rule, &points)?.max();
        let poisson = mass_defect(&k, KernelKind::Poisson { t }, &rule, &points)?.max();
        println!("t = {t:<5} heat mass defect {heat:.2e}  poisson mass defect {poisson:.2e}");
    }
    for kk in -2..=2 {
        let kind = KernelKind::Block { k: kk, variant: BlockVariant::Plain };
        println!("D_{kk:<2} cancellation defect {:.2e}", mass_defect(&k, kind, &rule, &points)?.max());
    }
    let err = semigroup_error(&k, |t| KernelKind::Poisson { t }, 0.25, 0.5, &rule, &points)?;
    println!("P_0.25 ∘ P_0.5 vs P_0.75: relative error {err:.2e}");
    Ok(())
}
