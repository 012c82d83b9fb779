//! Standard Gaussian primitives and the Ornstein–Uhlenbeck semigroup.
//!
//! `g` is the standard normal density, `G` its distribution function. The
//! tail-sensitive compositions (`G⁻¹`, `g∘G⁻¹`) are evaluated through the
//! scaled complementary error function so that nothing underflows for
//! probabilities down to `1e-300`.

mod ou;
mod quadrature;

pub use ou::{
    check_commutation, check_hypercontractivity, hypercontractivity_registry, ou_apply, variance_heat_identity,
    HypercontractivityReport, NamedFunction, VarianceHeatReport, HEAT_TRUNCATION,
};
pub use quadrature::{QuadratureRule, DEFAULT_ORDER, MAX_ORDER};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{domain, Result};

/// `1/√(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// Below this tail probability `g∘G⁻¹` switches to the Mills-ratio branch.
pub const G_OF_GINV_SWITCH: f64 = 1e-12;

/// Standard normal density `g(x)`.
pub fn gauss_pdf(x: f64) -> Result<f64> {
    finite(x)?;
    Ok(pdf(x))
}

/// `ln g(x)`, finite for every finite `x`.
pub fn gauss_ln_pdf(x: f64) -> Result<f64> {
    finite(x)?;
    Ok(-0.5 * x * x - HALF_LN_2PI)
}

/// Standard normal distribution function `G(x)`.
pub fn gauss_cdf(x: f64) -> Result<f64> {
    finite(x)?;
    Ok(cdf(x))
}

/// `1 − G(x)`, accurate in the upper tail.
pub fn gauss_sf(x: f64) -> Result<f64> {
    finite(x)?;
    Ok(cdf(-x))
}

/// `G⁻¹(p)` for `p ∈ (0, 1)`.
pub fn gauss_quantile(p: f64) -> Result<f64> {
    open_unit(p)?;
    Ok(quantile(p))
}

/// `g(G⁻¹(p))`, symmetric in `p ↔ 1−p` and positive for all `p ∈ (0,1)`.
pub fn g_of_ginv(p: f64) -> Result<f64> {
    open_unit(p)?;
    let q = if p > 0.5 { 1.0 - p } else { p };
    Ok(g_of_ginv_tail(q))
}

/// Leading-order asymptote `p·√(−2 ln p)` of `g∘G⁻¹` at zero.
pub fn g_of_ginv_asymptote(p: f64) -> f64 {
    p * (-2.0 * p.ln()).sqrt()
}

fn finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        domain(format!("expected a finite argument, got {x}"))
    }
}

fn open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        domain(format!("probability must lie in (0, 1), got {p}"))
    }
}

pub(crate) fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub(crate) fn cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(x * FRAC_1_SQRT_2)
    }
}

/// `ln G(x)`; uses `erfcx` for `x < −5` so it stays finite far past the
/// underflow point of `G` itself.
pub(crate) fn ln_cdf(x: f64) -> f64 {
    if x < -5.0 {
        let z = -x * FRAC_1_SQRT_2;
        (0.5 * erfcx(z)).ln() - z * z
    } else {
        cdf(x).ln()
    }
}

/// Mills-type ratio `G(x)/g(x)`.
pub(crate) fn cdf_over_pdf(x: f64) -> f64 {
    if x <= 0.0 {
        SQRT_HALF_PI * erfcx(-x * FRAC_1_SQRT_2)
    } else {
        cdf(x) / pdf(x)
    }
}

/// Scaled complementary error function `e^{z²}·erfc(z)` for `z ≥ 0`.
pub fn erfcx(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 4.0 {
        // Split z² so the exponential carries no rounding from the square.
        let hi = (z * 4096.0).trunc() / 4096.0;
        let lo = z - hi;
        erfc(z) * (hi * hi).exp() * (lo * (z + hi)).exp()
    } else {
        // Continued fraction, evaluated backwards.
        let mut t = z;
        for k in (1..=80).rev() {
            t = z + 0.5 * k as f64 / t;
        }
        1.0 / (PI.sqrt() * t)
    }
}

pub(crate) fn quantile(p: f64) -> f64 {
    if p == 0.5 {
        0.0
    } else if p < 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    }
}

/// `G⁻¹(q)` for `q ∈ (0, 1/2]`: rational start, Newton polish on `ln G`.
fn lower_quantile(q: f64) -> f64 {
    let mut x = acklam(q);
    let target = q.ln();
    for _ in 0..12 {
        let step = (ln_cdf(x) - target) * cdf_over_pdf(x);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Acklam's rational approximation to `G⁻¹`, relative error about 1e-9.
#[allow(clippy::excessive_precision)]
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// `g(G⁻¹(q))` for `q ∈ (0, 1/2]`.
pub(crate) fn g_of_ginv_tail(q: f64) -> f64 {
    let x = lower_quantile(q);
    if q >= G_OF_GINV_SWITCH {
        pdf(x)
    } else {
        // g(x) = G(x) / (G/g)(x); exact, and free of the e^{-x²/2} factor.
        q / cdf_over_pdf(x)
    }
}
