//! The weight `φ(u) = 2∫₀¹ u^{2t}/(1+t)² dt` attached to each continuous
//! coordinate of the modified Poincaré bound.
//!
//! `φ` is continuous and nondecreasing on `[0, 1]`, with `φ(0) = 0`,
//! `φ(1) = 1` and `φ(u) ∼ −1/ln u` as `u → 0`.

use crate::error::{domain, Result};
use crate::integrate::adaptive_simpson;

/// Absolute tolerance of the adaptive quadrature.
pub const PHI_TOLERANCE: f64 = 1e-10;

/// Below this argument `φ` is replaced by its asymptote.
pub const PHI_ASYMPTOTIC_BELOW: f64 = 1e-300;

pub fn phi(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return domain(format!("phi is defined on [0, 1], got {u}"));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if u < PHI_ASYMPTOTIC_BELOW {
        return Ok(-1.0 / u.ln());
    }
    let log_u = u.ln();
    let integrand = |t: f64| (2.0 * t * log_u).exp() / ((1.0 + t) * (1.0 + t));
    Ok(2.0 * adaptive_simpson(integrand, 0.0, 1.0, 0.5 * PHI_TOLERANCE))
}

/// `−1/ln u`, the small-`u` equivalent of [`phi`].
pub fn phi_asymptotic(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return domain(format!("phi_asymptotic is defined on (0, 1), got {u}"));
    }
    Ok(-1.0 / u.ln())
}
