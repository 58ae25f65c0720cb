//! Adaptive delaminating Levin quadrature for bivariate oscillatory integrals
//! `int int f(x, y) exp(i g(x, y)) dx dy` over rectangles.
//!
//! The entry point is [`adaptive_integrate`]. [`adaptive_gauss`] provides a
//! brute-force tensor Gauss-Legendre reference and [`harness`] holds the test
//! integrands and the benchmark runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod cheb;
pub mod driver;
pub mod error;
pub mod harness;
pub mod levin1d;
pub mod levin2d;
pub mod linsolve;
pub mod oracle;
mod par;
pub mod rect;

pub use adapt::{adaptive_integrate, mesh_dump, AdaptiveConfig, AdaptiveResult, MeshRecord, MeshRow};
pub use error::{Error, Result};
pub use levin1d::{levin1d_adaptive, levin1d_fixed, Levin1DConfig, Levin1DResult, Oscillator1D};
pub use levin2d::{delaminated_estimate, nondelaminated_estimate, Direction, FnIntegrand, Integrand2D, LevinParams, RectEstimate};
pub use linsolve::{SolveConfig, SolveMethod};
pub use num_complex::Complex64;
pub use oracle::{adaptive_gauss, adaptive_gauss_with, gauss_rect, gauss_rule, GaussRule, OracleConfig, OracleResult};
pub use rect::Rectangle;

/// Whether the crate was built with the rayon backend.
pub const PARALLEL_AVAILABLE: bool = par::ENABLED;
