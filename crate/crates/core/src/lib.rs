//! Dunkl-setting multiscale analysis: kernels, dyadic grids, Besov norms,
//! discrete Calderón reproducing frames and Calderón–Zygmund checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod besov;
pub mod config;
pub mod czo;
pub mod error;
pub mod experiments;
pub mod frame;
pub mod geometry;
pub mod grid;
pub mod kernels;
pub mod linalg;

pub use error::{Error, Result};
