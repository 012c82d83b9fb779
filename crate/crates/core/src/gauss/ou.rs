//! Ornstein–Uhlenbeck semigroup on `(ℝ, γ)` via Mehler's formula, and
//! numerical checks of the identities used to bound `Var(F)`.

use serde::Serialize;

use super::QuadratureRule;
use crate::error::{domain, Result};
use crate::integrate::composite_gauss_legendre;

/// Truncation time for the variance/heat time integral.
pub const HEAT_TRUNCATION: f64 = 20.0;

const HYPERCONTRACTIVITY_TOL: f64 = 1e-8;

/// `P_t f(y) = ∫ f(y e^{-t} + z √(1 − e^{-2t})) dγ(z)`.
///
/// `t = 0` returns `f(y)` exactly.
pub fn ou_apply<F: Fn(f64) -> f64>(f: F, t: f64, y: f64, rule: &QuadratureRule) -> Result<f64> {
    check_time(t)?;
    Ok(apply(&f, t, y, rule))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("time must be finite and nonnegative, got {t}"))
    }
}

fn apply<F: Fn(f64) -> f64>(f: &F, t: f64, y: f64, rule: &QuadratureRule) -> f64 {
    if t == 0.0 {
        return f(y);
    }
    let decay = (-t).exp();
    let spread = (-(-2.0 * t).exp_m1()).sqrt();
    let centre = y * decay;
    rule.integrate(|z| f(centre + spread * z))
}

/// Max over `grid` of `|d/dy P_t f − e^{-t} P_t f′|`, with the left side
/// taken by a central difference of step `1e-5·max(1, |y|)`.
pub fn check_commutation<F, D>(f: F, derivative: D, t: f64, rule: &QuadratureRule, grid: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    check_time(t)?;
    let decay = (-t).exp();
    let worst = grid
        .iter()
        .map(|&y| {
            let h = 1e-5 * y.abs().max(1.0);
            let fd = (apply(&f, t, y + h, rule) - apply(&f, t, y - h, rule)) / (2.0 * h);
            (fd - decay * apply(&derivative, t, y, rule)).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypercontractivityReport {
    /// `‖P_t f‖₂`
    pub lhs: f64,
    /// `‖f‖_{q*(t)}`
    pub rhs: f64,
    /// `q*(t) = 1 + e^{-2t}`
    pub exponent: f64,
    pub holds: bool,
}

impl HypercontractivityReport {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Nelson's bound `‖P_t f‖₂ ≤ ‖f‖_{1+e^{-2t}}` under `γ`, both sides by
/// (nested) quadrature.
pub fn check_hypercontractivity<F: Fn(f64) -> f64>(
    f: F,
    t: f64,
    rule: &QuadratureRule,
) -> Result<HypercontractivityReport> {
    check_time(t)?;
    let exponent = 1.0 + (-2.0 * t).exp();
    let lhs = rule
        .integrate(|y| {
            let v = apply(&f, t, y, rule);
            v * v
        })
        .sqrt();
    let rhs = rule.integrate(|y| f(y).abs().powf(exponent)).powf(exponent.recip());
    Ok(HypercontractivityReport {
        lhs,
        rhs,
        exponent,
        holds: lhs <= rhs + HYPERCONTRACTIVITY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceHeatReport {
    pub var: f64,
    /// `2∫₀^T E[(∂_y P_t F)²] dt` plus the tail estimate.
    pub integral_side: f64,
    /// `e^{-2T}·‖F′‖₂²`, the integral of `2e^{-2t}‖F′‖₂²` over `[T, ∞)`.
    pub tail: f64,
    pub discrepancy: f64,
}

/// `Var_γ(F) = 2∫₀^∞ E[(∂_y P_t F)²] dt` in one dimension.
///
/// The derivative is evaluated as `e^{-t} P_t F′`. The time integral runs
/// to [`HEAT_TRUNCATION`] with composite Gauss–Legendre (80 panels of
/// 8 points).
pub fn variance_heat_identity<F, D>(f: F, derivative: D, rule: &QuadratureRule) -> VarianceHeatReport
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mean = rule.integrate(&f);
    let var = rule.integrate(|y| {
        let d = f(y) - mean;
        d * d
    });
    let body = composite_gauss_legendre(
        |t| {
            let decay2 = (-2.0 * t).exp();
            decay2
                * rule.integrate(|y| {
                    let v = apply(&derivative, t, y, rule);
                    v * v
                })
        },
        0.0,
        HEAT_TRUNCATION,
        80,
        8,
    );
    let grad_sq = rule.integrate(|y| derivative(y).powi(2));
    let tail = (-2.0 * HEAT_TRUNCATION).exp() * grad_sq;
    let integral_side = 2.0 * body + tail;
    VarianceHeatReport {
        var,
        integral_side,
        tail,
        discrepancy: (var - integral_side).abs(),
    }
}

pub type NamedFunction = (&'static str, fn(f64) -> f64);

/// One-dimensional functions used to exercise the hypercontractive bound:
/// polynomials and exponentials, some saturated by a smooth `tanh` clip
/// (hard clipping leaves kinks that Gauss–Hermite resolves poorly).
pub fn hypercontractivity_registry() -> Vec<NamedFunction> {
    vec![
        ("const", |_| 1.0),
        ("linear", |y| y),
        ("affine", |y| 2.0 + y),
        ("quadratic", |y| y * y),
        ("hermite-2", |y| y * y - 1.0),
        ("cubic", |y| y * y * y - y),
        ("quartic", |y| y.powi(4) - 2.0 * y + 0.5),
        ("exp-half", |y| (0.5 * y).exp()),
        ("exp-clipped", |y| 5.0 * (y.exp() / 5.0).tanh()),
        ("exp-two-sided-clip", |y| 0.2 + 4.0 * ((-y).exp() / 4.0).tanh()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    #[test]
    fn mehler_examples() {
        let r = rule();
        let v = ou_apply(|y| y, 2f64.ln(), 1.0, &r).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        for t in [0.0, 0.3, 5.0] {
            assert!((ou_apply(|_| 3.25, t, -1.0, &r).unwrap() - 3.25).abs() < 1e-13);
        }
        let expect = 1.0 - (-2.0f64).exp();
        assert!((ou_apply(|y| y * y, 1.0, 0.0, &r).unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(ou_apply(|y| y, -0.1, 0.0, &rule()).is_err());
        assert!(check_hypercontractivity(|y| y, -1.0, &rule()).is_err());
    }

    #[test]
    fn large_time_tends_to_mean() {
        let r = rule();
        let v = ou_apply(|y| y * y + y, 40.0, 3.0, &r).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_at_time_zero_for_polynomials() {
        let r = rule();
        for deg in 0..=6 {
            for y in [-2.5, 0.0, 0.7, 3.0] {
                let f = |x: f64| x.powi(deg) + 0.5 * x;
                assert!((ou_apply(f, 0.0, y, &r).unwrap() - f(y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn semigroup_property_for_cubic() {
        let r = rule();
        let cube = |y: f64| y * y * y;
        let (t1, t2) = (0.4, 0.9);
        for y in [-1.0, 0.0, 1.0] {
            let two_step = ou_apply(|x| ou_apply(cube, t2, x, &r).unwrap(), t1, y, &r).unwrap();
            let one_step = ou_apply(cube, t1 + t2, y, &r).unwrap();
            assert!((two_step - one_step).abs() < 1e-8);
        }
    }

    #[test]
    fn commutation_examples() {
        let r = rule();
        let d = check_commutation(|y| y.powi(3), |y| 3.0 * y * y, 0.5, &r, &[-2.0, 0.0, 2.0]).unwrap();
        assert!(d <= 1e-7, "cubic discrepancy {d}");
        for t in [0.0, 0.2, 3.0] {
            let d = check_commutation(|y| y, |_| 1.0, t, &r, &[-1.0, 0.5, 4.0]).unwrap();
            assert!(d <= 1e-10);
            let d = check_commutation(|_| 2.0, |_| 0.0, t, &r, &[-1.0, 0.5, 4.0]).unwrap();
            assert!(d <= 1e-12);
        }
    }

    #[test]
    fn hypercontractivity_examples() {
        let r = rule();
        for t in [0.0, 0.5, 2.0] {
            let rep = check_hypercontractivity(|_| 1.0, t, &r).unwrap();
            assert!((rep.lhs - 1.0).abs() < 1e-12 && (rep.rhs - 1.0).abs() < 1e-12);
        }
        let rep = check_hypercontractivity(|y| y, 0.0, &r).unwrap();
        assert_eq!(rep.exponent, 2.0);
        assert!((rep.lhs - 1.0).abs() < 1e-12 && (rep.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponentials_saturate_nelson_bound() {
        // For e^{y/2}: ‖P_1 f‖₂ = ‖f‖_{1+e^{-2}} = exp((1 + e^{-2})/8).
        let r = rule();
        let rep = check_hypercontractivity(|y| (0.5 * y).exp(), 1.0, &r).unwrap();
        let closed = ((1.0 + (-2.0f64).exp()) / 8.0).exp();
        assert!((rep.lhs - closed).abs() < 1e-12);
        assert!((rep.rhs - closed).abs() < 1e-12);
        assert!(rep.holds);
    }

    #[test]
    fn registry_satisfies_nelson() {
        let r = rule();
        let reg = hypercontractivity_registry();
        assert_eq!(reg.len(), 10);
        for (name, f) in reg {
            for t in [0.1, 0.5, 2.0] {
                let rep = check_hypercontractivity(f, t, &r).unwrap();
                assert!(rep.holds, "{name} at t={t}: {rep:?}");
            }
        }
    }

    #[test]
    fn variance_heat_examples() {
        let r = rule();
        let lin = variance_heat_identity(|y| y, |_| 1.0, &r);
        assert!((lin.var - 1.0).abs() < 1e-12);
        assert!(lin.discrepancy < 1e-10);
        let c = variance_heat_identity(|_| 4.0, |_| 0.0, &r);
        assert_eq!(c.integral_side, 0.0);
        assert!(c.var.abs() < 1e-12);
        let q = variance_heat_identity(|y| y * y, |y| 2.0 * y, &r);
        assert!((q.var - 2.0).abs() < 1e-12);
        assert!(q.discrepancy <= 1e-6, "{q:?}");
    }
}
