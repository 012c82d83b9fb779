//! Numerical checks for a Gaussian modified Poincaré inequality and its
//! transfer to first passage percolation (FPP).
//!
//! The crate is organised bottom-up:
//!
//! * [`gauss`]: standard normal primitives, Gauss–Hermite quadrature and the
//!   Ornstein–Uhlenbeck semigroup identities.
//! * [`phi`]: the weight function `φ(u) = 2∫₀¹ u^{2t}/(1+t)² dt`.
//! * [`edgedist`]: edge-time laws, the change-of-variable factor `ψ` and the
//!   nearly-gamma classifier.
//! * [`poincare`]: the inequality itself, checked on a registry of test
//!   functions, plus the χ² and change-of-variable corollaries.
//! * [`averaging`]: the rank-based averaging function `g_m` on `{0,1}^{m²}`.
//! * [`fpp`]: finite-box lattice, weight fields, exact passage times.
//! * [`experiments`]: seeded Monte Carlo variance sweeps.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod edgedist;
mod error;
pub mod experiments;
pub mod fpp;
pub mod gauss;
pub mod integrate;
pub mod phi;
pub mod poincare;
pub mod seed;

pub use error::{Error, Result};
