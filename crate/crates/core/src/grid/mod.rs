//! Quadrature for dω, dyadic cube grids, kernel matrices and their disk cache.

pub mod cache;
mod dyadic;
mod matrix;
mod quadrature;

pub use dyadic::{build_grid, CoefficientField, DyadicGrid, MultiscaleGrid};
pub use matrix::{sample_operator, KernelMatrix, KernelMeta};
pub use quadrature::{build_quadrature, AxisRule, GradedSpec, QuadratureRule, RuleLayout, UniformSpec, MIN_COUNT};
