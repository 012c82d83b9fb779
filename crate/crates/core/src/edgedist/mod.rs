//! Edge-time laws `ν` on `ℝ⁺`, the change-of-variable factor
//! `ψ(y) = g∘G⁻¹(H(y)) / h(y)` and the nearly-gamma classifier.

mod family;
mod neargamma;

pub use family::Family;
pub use neargamma::{
    check_near_gamma_direct, check_near_gamma_sufficient, classify_near_gamma, DirectCheck, NearGammaReport,
    SufficientCheck, Verdict, RATIO_BAND,
};

use std::fmt::Debug;

use rand::Rng;

use crate::error::{domain, invalid, Result};
use crate::gauss;
use crate::seed;

/// Behaviour of the density at the upper end of the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RightTail {
    /// Finite upper endpoint with `h(x) = Θ((ν̄ − x)^β)`.
    Exponent(f64),
    /// Unbounded support.
    Unbounded,
}

/// An absolutely continuous law on `ℝ⁺`.
///
/// Implementations must keep `h > 0` exactly on the open support and
/// provide `sf` and `isf` that stay accurate deep in the upper tail.
pub trait EdgeDistribution: Debug + Send + Sync {
    fn name(&self) -> String;

    /// Support endpoints `(ν̲, ν̄)`; `ν̄` may be infinite.
    fn support(&self) -> (f64, f64);

    fn pdf(&self, y: f64) -> f64;

    fn cdf(&self, y: f64) -> f64;

    /// `1 − H(y)`.
    fn sf(&self, y: f64) -> f64;

    /// `H⁻¹(p)`.
    fn quantile(&self, p: f64) -> f64 {
        if p > 0.5 {
            return self.isf(1.0 - p);
        }
        solve_lower(self, p)
    }

    /// `H⁻¹(1 − q)` without forming `1 − q`.
    fn isf(&self, q: f64) -> f64 {
        if q > 0.5 {
            return self.quantile(1.0 - q);
        }
        solve_upper(self, q)
    }

    fn mean(&self) -> f64;

    fn variance(&self) -> f64;

    /// `α` with `h(x) = Θ((x − ν̲)^α)` near the lower endpoint, if known.
    fn left_exponent(&self) -> Option<f64> {
        None
    }

    fn right_tail(&self) -> Option<RightTail> {
        None
    }

    /// `(1 − H(t)) / h(t)`.
    fn tail_ratio(&self, t: f64) -> f64 {
        self.sf(t) / self.pdf(t)
    }
}

/// `ψ(y) = g∘G⁻¹(H(y)) / h(y)` on the open support.
///
/// The Gaussian factor is evaluated from whichever of `H(y)` and `1 − H(y)`
/// is smaller, so tail values keep full relative precision.
pub fn psi(dist: &dyn EdgeDistribution, y: f64) -> Result<f64> {
    let (lo, hi) = dist.support();
    if !(y > lo && y < hi) {
        return domain(format!("psi needs y in the open support ({lo}, {hi}), got {y}"));
    }
    let h = dist.pdf(y);
    if !(h > 0.0 && h.is_finite()) {
        return domain(format!("density at {y} is {h}; psi is undefined there"));
    }
    let lower = dist.cdf(y);
    let tail = if lower <= 0.5 { lower } else { dist.sf(y) };
    if !(tail > 0.0) {
        return domain(format!("tail probability at {y} underflows"));
    }
    Ok(gauss::g_of_ginv_tail(tail) / h)
}

/// Uniform draw from the open interval `(0, 1)`.
pub(crate) fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-cdf draws: `n` values, deterministic in `seed`.
pub fn sample(dist: &dyn EdgeDistribution, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("sample count must be at least 1");
    }
    let mut rng = seed::rng(seed);
    Ok((0..n).map(|_| dist.quantile(open_uniform(&mut rng))).collect())
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and `H`.
pub fn ks_statistic(dist: &dyn EdgeDistribution, values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let h = dist.cdf(x);
            ((i as f64 + 1.0) / n - h).max(h - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Solves `H(y) = p` for `p ≤ 1/2`: Newton on `ln H` inside a shrinking
/// bisection bracket.
fn solve_lower<D: EdgeDistribution + ?Sized>(dist: &D, p: f64) -> f64 {
    let (lo, hi) = dist.support();
    let mut a = lo;
    let mut b = finite_upper(dist, hi, |y| dist.cdf(y) >= p);
    let target = p.ln();
    let mut y = 0.5 * (a + b);
    for _ in 0..300 {
        let c = dist.cdf(y);
        if c < p {
            a = y;
        } else {
            b = y;
        }
        let h = dist.pdf(y);
        let mut next = if c > 0.0 && h > 0.0 {
            y - (c.ln() - target) * c / h
        } else {
            f64::NAN
        };
        if !(next > a && next < b) {
            next = bisect(a, b);
        }
        if (next - y).abs() <= 4.0 * f64::EPSILON * y.abs() || b - a <= 4.0 * f64::EPSILON * b.abs() {
            return next;
        }
        y = next;
    }
    y
}

/// Solves `1 − H(y) = q` for `q ≤ 1/2`.
fn solve_upper<D: EdgeDistribution + ?Sized>(dist: &D, q: f64) -> f64 {
    let (lo, hi) = dist.support();
    let mut a = lo;
    let mut b = finite_upper(dist, hi, |y| dist.sf(y) <= q);
    let target = q.ln();
    let mut y = 0.5 * (a + b);
    for _ in 0..300 {
        let s = dist.sf(y);
        if s > q {
            a = y;
        } else {
            b = y;
        }
        let h = dist.pdf(y);
        let mut next = if s > 0.0 && h > 0.0 {
            y + (s.ln() - target) * s / h
        } else {
            f64::NAN
        };
        if !(next > a && next < b) {
            next = bisect(a, b);
        }
        if (next - y).abs() <= 4.0 * f64::EPSILON * y.abs() || b - a <= 4.0 * f64::EPSILON * b.abs() {
            return next;
        }
        y = next;
    }
    y
}

/// Midpoint, switching to a geometric mean when the bracket spans decades.
fn bisect(a: f64, b: f64) -> f64 {
    if a > 0.0 && b / a > 4.0 {
        (a * b).sqrt()
    } else if a == 0.0 && b > 1e-300 {
        b * 1e-3
    } else {
        0.5 * (a + b)
    }
}

fn finite_upper<D: EdgeDistribution + ?Sized>(dist: &D, hi: f64, done: impl Fn(f64) -> bool) -> f64 {
    if hi.is_finite() {
        return hi;
    }
    let mut b = dist.mean().max(1.0);
    while !done(b) && b < 1e300 {
        b *= 2.0;
    }
    b
}
