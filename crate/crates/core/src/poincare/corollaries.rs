use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use super::{mc_report, standard_normal, InequalityReport, Moments, Shape, TestFunction};
use crate::edgedist::{open_uniform, psi, EdgeDistribution};
use crate::error::{domain, invalid, Result};
use crate::integrate::composite_gauss_legendre;

/// `W_n = ∫₀^π sin^n t dt` by the recurrence `W_n = (n−1)/n · W_{n−2}`.
fn wallis(n: u32) -> f64 {
    let (mut w, start) = if n.is_multiple_of(2) { (PI, 2) } else { (2.0, 3) };
    let mut j = start;
    while j <= n {
        w *= (j - 1) as f64 / j as f64;
        j += 2;
    }
    w
}

/// `c(k) = 2√k / ((k−1) ∫₀^π sin^{k−2})`.
pub fn c_k(k: u32) -> Result<f64> {
    if k < 2 {
        return domain(format!("c(k) needs k >= 2, got {k}"));
    }
    Ok(2.0 * (k as f64).sqrt() / ((k - 1) as f64 * wallis(k - 2)))
}

/// `c(k) = √k ∫₀^π |cos t| sin^{k−2} t dt / ∫₀^π sin^{k−2} t dt`, by
/// quadrature on each half of `[0, π]`.
pub fn c_k_quadrature(k: u32) -> Result<f64> {
    if k < 2 {
        return domain(format!("c(k) needs k >= 2, got {k}"));
    }
    let p = (k - 2) as i32;
    let half = |f: &dyn Fn(f64) -> f64| {
        composite_gauss_legendre(f, 0.0, FRAC_PI_2, 16, 20) + composite_gauss_legendre(f, FRAC_PI_2, PI, 16, 20)
    };
    let num = half(&|t: f64| t.cos().abs() * t.sin().powi(p));
    let den = half(&|t: f64| t.sin().powi(p));
    Ok((k as f64).sqrt() * num / den)
}

fn check_one_dim(f: &TestFunction, allow_bits: bool) -> Result<()> {
    if !allow_bits && f.bits() > 0 {
        return invalid("the χ² bound has no discrete coordinates");
    }
    if f.bits() > super::MAX_BITS {
        return invalid(format!(
            "at most {} discrete coordinates are supported",
            super::MAX_BITS
        ));
    }
    Ok(())
}

fn finite(value: f64, y: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        domain(format!(
            "function is not finite at {y:?}; is it defined on the support?"
        ))
    }
}

/// `Var g ≤ (2/α) Σ_i ‖∇̃_i g‖₂² φ(c(k)‖∇̃_i g‖₁/‖∇̃_i g‖₂)` under
/// `ν^{⊗n}`, `ν(dt) ∝ e^{−αt} t^{k/2−1}`, with `∇̃_i g = ∂_i g·√y_i`.
///
/// Draws use `y = Σ_{j<k} Z_j² / (2α)` for standard Gaussians `Z_j`.
pub fn verify_chi2_inequality(
    g: &TestFunction,
    k: u32,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("alpha must be positive, got {alpha}"));
    }
    let c = c_k(k)?;
    check_one_dim(g, false)?;
    let dim = g.dim();
    let mean = k as f64 / (2.0 * alpha);
    let shift = g.eval(&[], &vec![mean; dim]);
    let template = Moments::new(0, dim, if shift.is_finite() { shift } else { 0.0 });
    let shape = Shape {
        prefactor: 2.0 / alpha,
        scale: c,
    };
    mc_report(g.id(), samples, seed, &template, shape, |rng, m| {
        let y: Vec<f64> = (0..dim)
            .map(|_| (0..k).map(|_| standard_normal(rng).powi(2)).sum::<f64>() / (2.0 * alpha))
            .collect();
        m.add_value(1.0, finite(g.eval(&[], &y), &y)?);
        for i in 0..dim {
            m.add_gradient(1.0, i, finite(g.partial(&[], &y, i) * y[i].sqrt(), &y)?);
        }
        Ok(())
    })
}

/// `Var f ≤ Σ_q ‖∇_q f‖₂² + 2 Σ_i ‖∇_i f‖₂² φ(‖∇_i f‖₁/‖∇_i f‖₂)` under
/// `λ ⊗ ν^{⊗n}`, with `∇_i f = ψ(y_i)·∂_i f`.
pub fn verify_change_of_variables(
    f: &TestFunction,
    dist: &dyn EdgeDistribution,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    check_one_dim(f, true)?;
    let (bits, dim) = (f.bits(), f.dim());
    let median = dist.quantile(0.5);
    let shift = f.eval(&vec![false; bits], &vec![median; dim]);
    let template = Moments::new(bits, dim, if shift.is_finite() { shift } else { 0.0 });
    let shape = Shape {
        prefactor: 2.0,
        scale: 1.0,
    };
    mc_report(f.id(), samples, seed, &template, shape, |rng, m| {
        let mut x: Vec<bool> = (0..bits).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..dim).map(|_| dist.quantile(open_uniform(rng))).collect();
        let value = finite(f.eval(&x, &y), &y)?;
        m.add_value(1.0, value);
        for q in 0..bits {
            x[q] = !x[q];
            let flipped = f.eval(&x, &y);
            x[q] = !x[q];
            m.add_discrete(1.0, q, 0.5 * (value - flipped));
        }
        for i in 0..dim {
            m.add_gradient(1.0, i, finite(psi(dist, y[i])? * f.partial(&x, &y, i), &y)?);
        }
        Ok(())
    })
}
