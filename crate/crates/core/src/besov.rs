//! Discrete homogeneous Besov norms over dyadic coefficient fields.
//!
//! ‖λ‖ = { Σ_k 2^{kαq} ( Σ_Q ω(Q)|λ_Q|^p )^{q/p} }^{1/q}, with the usual
//! sup conventions when p or q is infinite.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{CoefficientField, MultiscaleGrid, QuadratureRule};

/// Exponents and smoothness for one norm evaluation. p and q may be +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl NormSpec {
    pub fn new(alpha: f64, p: f64, q: f64) -> Result<Self> {
        if !alpha.is_finite() || !(p > 0.0) || !(q > 0.0) {
            return Err(Error::Param(format!(
                "need finite α and p, q > 0 (got α={alpha}, p={p}, q={q})"
            )));
        }
        Ok(Self { alpha, p, q })
    }

    /// min(1, p, q): the exponent of the quasi-triangle inequality.
    pub fn theta(&self) -> f64 {
        1.0f64.min(self.p).min(self.q)
    }
}

/// (α, p, q) satisfying |α| < 1 and max{N/(N+1), N/(N+1+α)} < p < ∞, q ∈ (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovParams {
    alpha: f64,
    p: f64,
    q: f64,
    homogeneous_dim: f64,
}

/// Smallest admissible p (exclusive) for smoothness α in homogeneous dimension N.
pub fn p_lower_bound(alpha: f64, n: f64) -> f64 {
    (n / (n + 1.0)).max(n / (n + 1.0 + alpha))
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64, homogeneous_dim: f64) -> Result<Self> {
        if !(alpha.abs() < 1.0) {
            return Err(Error::Param(format!("|α| must be below 1, got α={alpha}")));
        }
        let bound = p_lower_bound(alpha, homogeneous_dim);
        if !(p > bound && p.is_finite()) {
            return Err(Error::Param(format!(
                "p={p} must satisfy max{{N/(N+1), N/(N+1+α)}} = {bound} < p < ∞ (N={homogeneous_dim}, α={alpha})"
            )));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Param(format!("q must lie in (0, ∞), got {q}")));
        }
        Ok(Self {
            alpha,
            p,
            q,
            homogeneous_dim,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn homogeneous_dim(&self) -> f64 {
        self.homogeneous_dim
    }

    pub fn spec(&self) -> NormSpec {
        NormSpec {
            alpha: self.alpha,
            p: self.p,
            q: self.q,
        }
    }
}

/// The dual triple (α′, p′, q′); infinite exponents are `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualParams {
    pub alpha_prime: f64,
    pub p_prime: f64,
    pub q_prime: f64,
}

impl DualParams {
    pub fn spec(&self) -> NormSpec {
        NormSpec {
            alpha: self.alpha_prime,
            p: self.p_prime,
            q: self.q_prime,
        }
    }
}

pub fn dual_params(params: &BesovParams) -> DualParams {
    let (alpha, p, q, n) = (params.alpha, params.p, params.q, params.homogeneous_dim);
    let (alpha_prime, p_prime) = if p > 1.0 {
        (-alpha, p / (p - 1.0))
    } else {
        (-alpha + n * (1.0 / p - 1.0), f64::INFINITY)
    };
    let q_prime = if q > 1.0 { q / (q - 1.0) } else { f64::INFINITY };
    DualParams {
        alpha_prime,
        p_prime,
        q_prime,
    }
}

/// Norm value with its per-scale breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    /// (k, (Σ_Q ω(Q)|λ_Q|^p)^{1/p}) for each scale.
    pub per_scale: Vec<(i32, f64)>,
    /// Largest weighted term 2^{kα}·inner_k at the two end scales.
    pub boundary_term: f64,
    pub spec: NormSpec,
    pub grid_signature: String,
}

impl NormReport {
    /// Re-aggregates the breakdown; equals `value` up to rounding.
    pub fn recompute(&self) -> f64 {
        let weighted = self
            .per_scale
            .iter()
            .map(|&(k, inner)| (2.0f64).powf(k as f64 * self.spec.alpha) * inner);
        lq_norm(weighted, self.spec.q)
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// (Σ |a|^r)^{1/r} or max |a| for r = ∞, computed on values rescaled by their maximum.
fn lq_norm(values: impl Iterator<Item = f64>, r: f64) -> f64 {
    let v: Vec<f64> = values.map(f64::abs).collect();
    let scale = v.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 || r.is_infinite() {
        return scale;
    }
    scale * compensated_sum(v.iter().map(|a| (a / scale).powf(r))).powf(1.0 / r)
}

/// (Σ_Q ω(Q)|λ_Q|^p)^{1/p}, or sup_Q |λ_Q| when p = ∞.
fn weighted_lp(values: &[f64], measures: &[f64], p: f64) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || p.is_infinite() {
        return scale;
    }
    let s = compensated_sum(values.iter().zip(measures).map(|(v, w)| w * (v.abs() / scale).powf(p)));
    scale * s.powf(1.0 / p)
}

pub fn besov_norm(field: &CoefficientField, grids: &MultiscaleGrid, spec: &NormSpec) -> Result<NormReport> {
    if field.scale_count() == 0 {
        return Err(Error::Config("empty scale range".into()));
    }
    if field.k_min() != grids.k_min() || field.scale_count() != grids.grids().len() {
        return Err(Error::Config("coefficient field does not match the grids".into()));
    }
    let per_scale: Vec<(i32, f64)> = field
        .iter()
        .zip(grids.grids())
        .map(|((k, v), g)| {
            if v.len() != g.len() {
                return Err(Error::Config(format!("scale {k}: field and grid sizes differ")));
            }
            Ok((k, weighted_lp(v, g.measures(), spec.p)))
        })
        .collect::<Result<_>>()?;
    let weight = |(k, inner): (i32, f64)| (2.0f64).powf(k as f64 * spec.alpha) * inner;
    let boundary_term = weight(per_scale[0]).max(weight(per_scale[per_scale.len() - 1]));
    let value = lq_norm(per_scale.iter().copied().map(weight), spec.q);
    Ok(NormReport {
        value,
        per_scale,
        boundary_term,
        spec: *spec,
        grid_signature: grids.signature(),
    })
}

/// ⟨f, g⟩ = Σ_j w_j f_j g_j.
pub fn duality_pairing(f: &[f64], g: &[f64], rule: &QuadratureRule) -> Result<f64> {
    if f.len() != rule.len() || g.len() != rule.len() {
        return Err(Error::Config(format!(
            "pairing needs {} samples per function, got {} and {}",
            rule.len(),
            f.len(),
            g.len()
        )));
    }
    Ok(compensated_sum(
        f.iter().zip(g).zip(rule.weights()).map(|((a, b), w)| w * a * b),
    ))
}

/// Hypotheses of the multiscale Schur estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchurHypothesis {
    pub spec: NormSpec,
    pub eps: f64,
    pub theta: f64,
    pub homogeneous_dim: f64,
}

impl SchurHypothesis {
    /// Requires |α| < ε, max{N/(N+ε), N/(N+ε+α)} < θ ≤ 1, θ < p and
    /// max{N/(N+ε), N/(N+ε+α)} < p.
    pub fn validate(&self) -> Result<()> {
        let (a, e, n) = (self.spec.alpha, self.eps, self.homogeneous_dim);
        if !(e > 0.0) || !(a.abs() < e) {
            return Err(Error::Param(format!("need 0 < |α| < ε, got α={a}, ε={e}")));
        }
        let lower = (n / (n + e)).max(n / (n + e + a));
        if !(self.theta > lower && self.theta <= 1.0 && self.theta < self.spec.p) {
            return Err(Error::Param(format!(
                "θ={} must satisfy {lower} < θ ≤ 1 and θ < p={}",
                self.theta, self.spec.p
            )));
        }
        if !(self.spec.p > lower) {
            return Err(Error::Param(format!("p={} must exceed {lower}", self.spec.p)));
        }
        Ok(())
    }
}

/// Matrices S_{k,k′}(x_{Q′}, x_Q): rows are target cubes at scale k′, columns source cubes at scale k.
pub trait SchurFamily {
    fn block(&self, k_target: i32, k_source: i32) -> Result<DMatrix<f64>>;
}

impl<F: Fn(i32, i32) -> Result<DMatrix<f64>>> SchurFamily for F {
    fn block(&self, k_target: i32, k_source: i32) -> Result<DMatrix<f64>> {
        self(k_target, k_source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// μ_{Q′} = Σ_k Σ_Q ω(Q) S_{k,k′}(x_{Q′}, x_Q) λ_Q on the target grids.
pub fn schur_apply(
    family: &dyn SchurFamily,
    field: &CoefficientField,
    source: &MultiscaleGrid,
    target: &MultiscaleGrid,
) -> Result<CoefficientField> {
    let mut out = Vec::with_capacity(target.grids().len());
    for tg in target.grids() {
        let mut mu = vec![0.0; tg.len()];
        for (sg, (k, lambda)) in source.grids().iter().zip(field.iter()) {
            let m = family.block(tg.k(), k)?;
            if m.nrows() != tg.len() || m.ncols() != sg.len() {
                return Err(Error::Config(format!(
                    "S_({k},{}) is {}×{}, expected {}×{}",
                    tg.k(),
                    m.nrows(),
                    m.ncols(),
                    tg.len(),
                    sg.len()
                )));
            }
            let wl: Vec<f64> = lambda.iter().zip(sg.measures()).map(|(l, w)| l * w).collect();
            for (r, acc) in mu.iter_mut().enumerate() {
                *acc += m.row(r).iter().zip(&wl).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out.push(mu);
    }
    CoefficientField::new(target, out)
}

/// LHS/RHS of the multiscale Schur estimate for one coefficient field.
pub fn schur_bound_test(
    family: &dyn SchurFamily,
    field: &CoefficientField,
    source: &MultiscaleGrid,
    target: &MultiscaleGrid,
    hypothesis: &SchurHypothesis,
) -> Result<SchurReport> {
    hypothesis.validate()?;
    let mu = schur_apply(family, field, source, target)?;
    let lhs = besov_norm(&mu, target, &hypothesis.spec)?.value;
    let rhs = besov_norm(field, source, &hypothesis.spec)?.value;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(SchurReport { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_indices_by_branch() {
        let d = dual_params(&BesovParams::new(0.5, 2.0, 2.0, 3.0).unwrap());
        assert_eq!((d.alpha_prime, d.p_prime, d.q_prime), (-0.5, 2.0, 2.0));
        let d = dual_params(&BesovParams::new(0.2, 0.9, 0.5, 3.0).unwrap());
        assert!((d.alpha_prime - 2.0 / 15.0).abs() < 1e-15);
        assert!(d.p_prime.is_infinite() && d.q_prime.is_infinite());
        let d = dual_params(&BesovParams::new(0.1, 1.0, 1.0, 3.0).unwrap());
        assert!(d.p_prime.is_infinite() && d.q_prime.is_infinite());
        assert!((d.alpha_prime + 0.1).abs() < 1e-15);
    }

    #[test]
    fn invalid_p_names_the_bound() {
        let err = BesovParams::new(-0.5, 0.85, 1.0, 3.0).unwrap_err();
        assert!(err.to_string().contains("max{N/(N+1), N/(N+1+α)}"), "{err}");
        assert!(BesovParams::new(1.0, 2.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert_eq!(compensated_sum(v), 2e-16);
    }
}
