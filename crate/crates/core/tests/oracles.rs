//! Closed-form kernels checked against independently computed references.

use dunkl_besov::besov::{schur_bound_test, NormSpec, SchurHypothesis};
use dunkl_besov::geometry::DunklStructure;
use dunkl_besov::grid::{CoefficientField, MultiscaleGrid, QuadratureRule, UniformSpec};
use dunkl_besov::kernels::Kernels;
use nalgebra::{DMatrix, DVector};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use statrs::function::gamma::gamma;

/// Σ_n (xy)^n / c_n with c_n = ∏_{j≤n} (j + 2κ·[j odd]), exact in ℚ.
fn dunkl_series_exact(kappa: &BigRational, xy: &BigRational, terms: usize) -> f64 {
    let two = BigRational::from_integer(BigInt::from(2));
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for j in 1..=terms {
        let mut c = BigRational::from_integer(BigInt::from(j));
        if j % 2 == 1 {
            c += &two * kappa;
        }
        term = term * xy / c;
        sum += &term;
    }
    sum.to_f64().expect("finite sum")
}

/// Same series in floating point.
fn dunkl_series_f64(kappa: f64, xy: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for j in 1..400 {
        let c = j as f64 + if j % 2 == 1 { 2.0 * kappa } else { 0.0 };
        term *= xy / c;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// ∫_ℝ e^{−s²/2} (√2|s|)^{2κ} ds = 2^κ 2^{κ+1/2} Γ(κ+1/2).
fn gaussian_moment(kappa: f64) -> f64 {
    (2.0f64).powf(2.0 * kappa + 0.5) * gamma(kappa + 0.5)
}

#[test]
fn dunkl_kernel_matches_rational_series() {
    // Quarter-integer arguments are exact in both representations.
    let grid: Vec<i64> = vec![-16, -11, -6, -3, -1, 0, 1, 2, 5, 9, 13, 16];
    for (kn, kd) in [(1, 4), (1, 2), (1, 1), (3, 2), (5, 2)] {
        let kappa = ratio(kn, kd);
        let k = Kernels::new(DunklStructure::rank_one(kn as f64 / kd as f64).unwrap()).unwrap();
        for &a in &grid {
            for &b in &grid {
                let (x, y) = (a as f64 / 4.0, b as f64 / 4.0);
                let oracle = dunkl_series_exact(&kappa, &ratio(a * b, 16), 160);
                let got = k.dunkl_kernel(&[x], &[y]);
                let err = (got - oracle).abs() / oracle.abs().max(1.0);
                assert!(err < 1e-8, "κ={kn}/{kd} x={x} y={y}: {got} vs {oracle}");
            }
        }
    }
}

#[test]
fn product_dunkl_kernel_factorizes_over_axes() {
    let k = Kernels::new(DunklStructure::product(&[0.5, 1.5]).unwrap()).unwrap();
    let (x, y) = ([1.25, -2.0], [-0.75, 3.5]);
    let oracle = dunkl_series_exact(&ratio(1, 2), &ratio(-15, 16), 160)
        * dunkl_series_exact(&ratio(3, 2), &ratio(-7, 1), 160);
    let got = k.dunkl_kernel(&x, &y);
    assert!((got - oracle).abs() < 1e-10 * oracle.abs().max(1.0), "{got} vs {oracle}");
}

#[test]
fn zero_multiplicity_series_is_exponential() {
    assert_eq!(dunkl_series_exact(&BigRational::zero(), &ratio(3, 2), 60), (1.5f64).exp());
}

#[test]
fn heat_kernel_matches_series_representation() {
    for kappa in [0.25, 1.0, 2.0] {
        let k = Kernels::new(DunklStructure::rank_one(kappa).unwrap()).unwrap();
        let n = 2.0 * kappa + 1.0;
        for t in [0.1f64, 0.5, 2.0] {
            for (x, y) in [(0.3f64, 0.4f64), (-0.8, 0.5), (1.1, -1.1), (0.0, 1.7), (1.5, 1.0)] {
                let s = (2.0 * t).sqrt();
                let oracle = (2.0 * t).powf(-n / 2.0) / gaussian_moment(kappa)
                    * (-(x * x + y * y) / (4.0 * t)).exp()
                    * dunkl_series_f64(kappa, (x / s) * (y / s));
                let got = k.heat(t, &[x], &[y]).unwrap();
                assert!((got - oracle).abs() < 1e-10 * oracle.abs().max(1e-300), "κ={kappa} t={t} ({x},{y}): {got} vs {oracle}");
            }
        }
    }
}

/// P_t(0, y) = Γ((N+1)/2) / (√π Γ(N/2)) · t (t² + y²)^{−(N+1)/2} / 2^κ in rank one.
fn poisson_at_origin(kappa: f64, t: f64, y: f64) -> f64 {
    let n = 2.0 * kappa + 1.0;
    gamma((n + 1.0) / 2.0) / (std::f64::consts::PI.sqrt() * gamma(n / 2.0)) * t
        / (t * t + y * y).powf((n + 1.0) / 2.0)
        / (2.0f64).powf(kappa)
}

#[test]
fn poisson_at_origin_matches_beta_integral() {
    for kappa in [0.5, 1.0, 1.75] {
        let k = Kernels::new(DunklStructure::rank_one(kappa).unwrap()).unwrap();
        for t in [0.05, 0.5, 1.0, 8.0] {
            for y in [0.0, 0.3, 1.0, 4.0, 20.0] {
                let oracle = poisson_at_origin(kappa, t, y);
                for got in [k.poisson(t, &[0.0], &[y]).unwrap(), k.poisson_direct(t, &[0.0], &[y]).unwrap()] {
                    assert!((got / oracle - 1.0).abs() < 1e-8, "κ={kappa} t={t} y={y}: {got} vs {oracle}");
                }
            }
        }
    }
}

#[test]
fn trivial_multiplicity_in_two_dimensions_is_euclidean() {
    let k = Kernels::new(DunklStructure::product(&[0.0, 0.0]).unwrap()).unwrap();
    let pi = std::f64::consts::PI;
    for (t, x, y) in [(0.5, [0.1, -0.2], [0.7, 0.4]), (2.0, [1.0, 1.0], [-1.5, 0.25])] {
        let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let gauss = (4.0 * pi * t).recip() * (-r2 / (4.0 * t)).exp();
        assert!((k.heat(t, &x, &y).unwrap() / gauss - 1.0).abs() < 1e-12);
        let cauchy = t / (2.0 * pi * (t * t + r2).powf(1.5));
        assert!((k.poisson(t, &x, &y).unwrap() / cauchy - 1.0).abs() < 1e-8);
    }
}

#[test]
fn mixed_product_heat_is_gaussian_times_rank_one() {
    let mixed = Kernels::new(DunklStructure::product(&[0.0, 1.0]).unwrap()).unwrap();
    let one = Kernels::new(DunklStructure::rank_one(1.0).unwrap()).unwrap();
    let (t, x, y) = (0.7f64, [0.4f64, -0.9], [-0.3, -0.2]);
    let gauss = (4.0 * std::f64::consts::PI * t).sqrt().recip() * (-(x[0] - y[0]).powi(2) / (4.0 * t)).exp();
    let expected = gauss * one.heat(t, &x[1..], &y[1..]).unwrap();
    assert!((mixed.heat(t, &x, &y).unwrap() / expected - 1.0).abs() < 1e-12);
}

#[test]
fn single_scale_schur_ratio_is_bounded_by_weighted_matrix_norm() {
    let s = DunklStructure::rank_one(1.0).unwrap();
    let rule = QuadratureRule::uniform(&s, UniformSpec { half_width: 2.0, cell_width: 0.25, order: 2 }).unwrap();
    let source = MultiscaleGrid::build(0, 0, 1, 2.0, &rule).unwrap();
    let target = MultiscaleGrid::build(0, 0, 2, 2.0, &rule).unwrap();
    let (sg, tg) = (&source.grids()[0], &target.grids()[0]);
    let m = DMatrix::from_fn(tg.len(), sg.len(), |i, j| {
        let d = tg.center(i)[0] - sg.center(j)[0];
        (-d * d).exp() * (1.0 + 0.3 * d)
    });
    let family = |_: i32, _: i32| Ok(m.clone());
    let hyp = SchurHypothesis {
        spec: NormSpec::new(0.05, 2.0, 2.0).unwrap(),
        eps: 0.25,
        theta: 0.95,
        homogeneous_dim: s.homogeneous_dim(),
    };
    // sup ‖μ‖/‖λ‖ = ‖W_t^{1/2} S W_s^{1/2}‖₂ at a single scale k = 0.
    let ws = DVector::from_iterator(sg.len(), sg.measures().iter().map(|w| w.sqrt()));
    let wt = DVector::from_iterator(tg.len(), tg.measures().iter().map(|w| w.sqrt()));
    let weighted = DMatrix::from_diagonal(&wt) * &m * DMatrix::from_diagonal(&ws);
    let svd = weighted.clone().svd(true, true);
    let (imax, &smax) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let v = svd.v_t.unwrap().row(imax).transpose();
    let top = v.iter().zip(ws.iter()).map(|(a, w)| a / w).collect();
    let field = CoefficientField::new(&source, vec![top]).unwrap();
    let r = schur_bound_test(&family, &field, &source, &target, &hyp).unwrap();
    assert!((r.ratio / smax - 1.0).abs() < 1e-10, "{} vs {smax}", r.ratio);

    for seed in 0..10u64 {
        let vals = (0..sg.len()).map(|j| ((j as f64 + 1.0) * (seed as f64 + 0.5)).sin()).collect();
        let f = CoefficientField::new(&source, vec![vals]).unwrap();
        assert!(schur_bound_test(&family, &f, &source, &target, &hyp).unwrap().ratio <= smax * (1.0 + 1e-12));
    }
}

#[test]
fn remainder_kernel_annihilates_constants() {
    use dunkl_besov::czo::verify_remainder_vanishing;
    use dunkl_besov::frame::{FrameConfig, FrameGeometry};
    let k = Kernels::new(DunklStructure::rank_one(1.0).unwrap()).unwrap();
    let cfg = FrameConfig { k_min: -1, k_max: 1, m0: 1, half_width: 8.0, base_cell: 0.125, order: 2 };
    let g = FrameGeometry::build(&k, cfg).unwrap();
    let r = verify_remainder_vanishing(&g, &[vec![0.5], vec![-1.3], vec![0.05]]).unwrap();
    assert!(r.t1_max < 1e-6 && r.t1star_max < 1e-6, "{r:?}");
}
