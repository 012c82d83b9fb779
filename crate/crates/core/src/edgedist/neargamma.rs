//! Nearly-gamma classification.
//!
//! Two independent lines of evidence are gathered:
//!
//! * the sufficient conditions on the density (`h(x) = Θ((x − ν̲)^α)` at the
//!   lower end; either `Θ((ν̄ − x)^β)` at a finite upper end or a bounded
//!   tail ratio `(1 − H)/h` for unbounded support), checked as ratio bands on
//!   geometric grids;
//! * direct numerical evidence for `ψ(y) ≤ A√y` and
//!   `ν(ψ ≤ a) = O(a^ε)` on a quantile grid.
//!
//! Neither is a proof: the conditions are asymptotic and the constants are
//! unspecified, so the report carries the fitted quantities.

use serde::Serialize;

use super::{psi, EdgeDistribution, RightTail};
use crate::error::{invalid, Error, Result};

/// A `Θ(·)` ratio passes when every grid value stays within
/// `[1/RATIO_BAND, RATIO_BAND]` times the reference value.
pub const RATIO_BAND: f64 = 5.0;

const MIN_GRID: usize = 100;
const BASE_TAIL: f64 = 1e-12;
const REFINED_TAIL: f64 = 1e-24;
const A_HAT_STABILITY: f64 = 0.10;
const EPSILON_MIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientCheck {
    pub alpha: f64,
    /// `[min, max]` of `h(x)/(x−ν̲)^α` relative to its value nearest `ν̲`.
    pub alpha_ratio_range: [f64; 2],
    pub alpha_ok: bool,
    /// `[min, max]` of the upper-end ratio (exponent or tail form),
    /// relative to its reference value.
    pub tail_ratio_range: [f64; 2],
    pub bounded_support: bool,
    pub beta_or_tail_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectCheck {
    pub grid_size: usize,
    /// `max ψ(y)/√y` on the base grid.
    pub a_hat: f64,
    /// Same on the doubled, deeper grid.
    pub a_hat_refined: f64,
    pub a_bound_ok: bool,
    /// Fitted slope of `ln ν(ψ ≤ a)` against `ln a`, `a ∈ [1e-4, 1e-1]`.
    pub epsilon_hat: f64,
    pub small_ball_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SufficientConditionsPass,
    DirectEvidenceOnly,
    Fail,
}

/// Combined report. Flags are numerical evidence only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearGammaReport {
    pub distribution: String,
    #[serde(rename = "direct_A_hat")]
    pub direct_a_hat: f64,
    #[serde(rename = "direct_A_hat_refined")]
    pub direct_a_hat_refined: f64,
    pub direct_epsilon_hat: f64,
    pub direct_pass: bool,
    /// `None` when the law exposes no analytic exponents.
    pub sufficient_alpha_ok: Option<bool>,
    pub sufficient_beta_or_tail_ok: Option<bool>,
    pub verdict: Verdict,
    pub evidence_only: bool,
}

fn band(values: &[f64], reference: f64) -> ([f64; 2], bool) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        let r = v / reference;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let ok = reference > 0.0
        && reference.is_finite()
        && lo >= 1.0 / RATIO_BAND
        && hi <= RATIO_BAND
        && lo.is_finite()
        && hi.is_finite();
    ([lo, hi], ok)
}

/// Checks the density conditions that imply the nearly-gamma property.
pub fn check_near_gamma_sufficient(dist: &dyn EdgeDistribution) -> Result<SufficientCheck> {
    let alpha = dist
        .left_exponent()
        .ok_or_else(|| Error::NotCheckable(format!("{} has no analytic left exponent", dist.name())))?;
    let right = dist
        .right_tail()
        .ok_or_else(|| Error::NotCheckable(format!("{} has no right-tail description", dist.name())))?;
    let (lo, hi) = dist.support();
    let median = dist.quantile(0.5);

    // Lower end: δ = s·10^{-j}, j = 1..=12, reference at the smallest δ.
    let span = median - lo;
    let left: Vec<f64> = (1..=12)
        .map(|j| {
            let delta = span * 10f64.powi(-j);
            dist.pdf(lo + delta) / delta.powf(alpha)
        })
        .collect();
    let (alpha_ratio_range, alpha_shape_ok) = band(&left, *left.last().unwrap());
    let alpha_ok = alpha > -1.0 && alpha_shape_ok;

    let (tail_ratio_range, beta_or_tail_ok, bounded_support) = match right {
        RightTail::Exponent(beta) => {
            let span = hi - median;
            let vals: Vec<f64> = (1..=12)
                .map(|j| {
                    let delta = span * 10f64.powi(-j);
                    dist.pdf(hi - delta) / delta.powf(beta)
                })
                .collect();
            let (range, ok) = band(&vals, *vals.last().unwrap());
            (range, ok && beta > -1.0 && hi.is_finite(), true)
        }
        RightTail::Unbounded => {
            // t from the median A to 40·A on a geometric grid.
            let start = median.max(f64::MIN_POSITIVE);
            let vals: Vec<f64> = (0..=60)
                .map(|i| dist.tail_ratio(start * 40f64.powf(i as f64 / 60.0)))
                .collect();
            let (range, ok) = band(&vals, vals[0]);
            (range, ok && hi.is_infinite(), false)
        }
    };

    Ok(SufficientCheck {
        alpha,
        alpha_ratio_range,
        alpha_ok,
        tail_ratio_range,
        bounded_support,
        beta_or_tail_ok,
    })
}

/// Grid point: tail probability and which end it is measured from.
#[derive(Clone, Copy)]
struct Node {
    tail: f64,
    upper: bool,
    psi: f64,
    y: f64,
}

fn quantile_grid(dist: &dyn EdgeDistribution, size: usize, deepest: f64) -> Vec<Node> {
    let (lo, hi) = dist.support();
    let per_side = size / 2;
    let top = 0.5f64.ln();
    let bottom = deepest.ln();
    let mut nodes = Vec::with_capacity(2 * per_side);
    for upper in [false, true] {
        for i in 0..per_side {
            let frac = i as f64 / (per_side - 1) as f64;
            let tail = (bottom + frac * (top - bottom)).exp();
            let y = if upper { dist.isf(tail) } else { dist.quantile(tail) };
            if !(y > lo && y < hi) {
                continue;
            }
            if let Ok(v) = psi(dist, y) {
                nodes.push(Node { tail, upper, psi: v, y });
            }
        }
    }
    nodes
}

fn a_hat(nodes: &[Node]) -> f64 {
    nodes
        .iter()
        .filter(|n| n.y > 0.0)
        .map(|n| n.psi / n.y.sqrt())
        .fold(0.0, f64::max)
}

/// `ν(ψ ≤ a)`, with `ψ` interpolated linearly in log tail probability
/// inside each grid cell.
fn small_ball_mass(nodes: &[Node], a: f64) -> f64 {
    let mut mass = 0.0;
    for upper in [false, true] {
        let side: Vec<&Node> = nodes.iter().filter(|n| n.upper == upper).collect();
        for pair in side.windows(2) {
            let (n0, n1) = (pair[0], pair[1]);
            let (p0, p1) = (n0.tail, n1.tail);
            let in0 = n0.psi <= a;
            let in1 = n1.psi <= a;
            mass += match (in0, in1) {
                (true, true) => p1 - p0,
                (false, false) => 0.0,
                _ => {
                    let theta = (a - n0.psi) / (n1.psi - n0.psi);
                    let pc = (p0.ln() + theta * (p1.ln() - p0.ln())).exp();
                    if in0 {
                        pc - p0
                    } else {
                        p1 - pc
                    }
                }
            };
        }
        // Mass below the deepest node on this side.
        if let Some(first) = side.first() {
            if first.psi <= a {
                mass += first.tail;
            }
        }
    }
    mass
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Direct evidence for the nearly-gamma conditions on a quantile grid of
/// `grid_size` points (half per tail, log-spaced tail probabilities down to
/// `1e-12`). Stability of `A` is judged against a grid with twice the
/// points reaching `1e-24`.
pub fn check_near_gamma_direct(dist: &dyn EdgeDistribution, grid_size: usize) -> Result<DirectCheck> {
    if grid_size < MIN_GRID {
        return invalid(format!(
            "quantile grid needs at least {MIN_GRID} points, got {grid_size}"
        ));
    }
    let base = quantile_grid(dist, grid_size, BASE_TAIL);
    let refined = quantile_grid(dist, 2 * grid_size, REFINED_TAIL);
    if base.len() < grid_size / 2 {
        return invalid(format!("only {} usable grid points for {}", base.len(), dist.name()));
    }
    let a_base = a_hat(&base);
    let a_refined = a_hat(&refined);
    let a_bound_ok = a_base.is_finite()
        && a_refined.is_finite()
        && a_base > 0.0
        && (a_refined - a_base).abs() < A_HAT_STABILITY * a_base;

    let mut log_a = Vec::new();
    let mut log_mass = Vec::new();
    for k in 0..=12 {
        let a = 10f64.powf(-4.0 + 3.0 * k as f64 / 12.0);
        let m = small_ball_mass(&refined, a);
        if m > 0.0 {
            log_a.push(a.ln());
            log_mass.push(m.ln());
        }
    }
    let epsilon_hat = if log_a.len() >= 3 {
        slope(&log_a, &log_mass)
    } else {
        0.0
    };
    let small_ball_ok = epsilon_hat > EPSILON_MIN;
    Ok(DirectCheck {
        grid_size,
        a_hat: a_base,
        a_hat_refined: a_refined,
        a_bound_ok,
        epsilon_hat,
        small_ball_ok,
        pass: a_bound_ok && small_ball_ok,
    })
}

/// Runs both checks and combines them into a verdict.
pub fn classify_near_gamma(dist: &dyn EdgeDistribution, grid_size: usize) -> Result<NearGammaReport> {
    let direct = check_near_gamma_direct(dist, grid_size)?;
    let sufficient = match check_near_gamma_sufficient(dist) {
        Ok(s) => Some(s),
        Err(Error::NotCheckable(_)) => None,
        Err(e) => return Err(e),
    };
    let sufficient_pass = sufficient.as_ref().is_some_and(|s| s.alpha_ok && s.beta_or_tail_ok);
    let verdict = match (sufficient_pass, direct.pass) {
        (true, true) => Verdict::SufficientConditionsPass,
        (false, true) => Verdict::DirectEvidenceOnly,
        _ => Verdict::Fail,
    };
    Ok(NearGammaReport {
        distribution: dist.name(),
        direct_a_hat: direct.a_hat,
        direct_a_hat_refined: direct.a_hat_refined,
        direct_epsilon_hat: direct.epsilon_hat,
        direct_pass: direct.pass,
        sufficient_alpha_ok: sufficient.as_ref().map(|s| s.alpha_ok),
        sufficient_beta_or_tail_ok: sufficient.as_ref().map(|s| s.beta_or_tail_ok),
        verdict,
        evidence_only: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgedist::Family;

    /// Pareto-type law on `(0, ∞)`: `1 − H(y) = (1 + y)^{-2}`. Its ψ grows
    /// linearly, so it is not nearly gamma.
    #[derive(Debug)]
    struct Lomax;

    impl EdgeDistribution for Lomax {
        fn name(&self) -> String {
            "lomax".into()
        }
        fn support(&self) -> (f64, f64) {
            (0.0, f64::INFINITY)
        }
        fn pdf(&self, y: f64) -> f64 {
            if y > 0.0 {
                2.0 * (1.0 + y).powi(-3)
            } else {
                0.0
            }
        }
        fn cdf(&self, y: f64) -> f64 {
            if y > 0.0 {
                1.0 - (1.0 + y).powi(-2)
            } else {
                0.0
            }
        }
        fn sf(&self, y: f64) -> f64 {
            if y > 0.0 {
                (1.0 + y).powi(-2)
            } else {
                1.0
            }
        }
        fn mean(&self) -> f64 {
            1.0
        }
        fn variance(&self) -> f64 {
            f64::INFINITY
        }
    }

    fn fam(s: &str) -> Family {
        s.parse().unwrap()
    }

    #[test]
    fn sufficient_conditions_for_usual_laws() {
        for s in [
            "exp:rate=1",
            "gamma:shape=2",
            "beta:a=2,b=3",
            "uniform:lo=0,hi=1",
            "chi2:k=3,alpha=2",
        ] {
            let c = check_near_gamma_sufficient(&fam(s)).unwrap();
            assert!(c.alpha_ok && c.beta_or_tail_ok, "{s}: {c:?}");
        }
        let e = check_near_gamma_sufficient(&fam("exp:rate=1")).unwrap();
        assert_eq!(e.tail_ratio_range, [1.0, 1.0]);
    }

    #[test]
    fn half_normal_fails_tail_condition() {
        let c = check_near_gamma_sufficient(&Family::HalfNormal).unwrap();
        assert!(c.alpha_ok);
        assert!(!c.beta_or_tail_ok, "{c:?}");
    }

    #[test]
    fn missing_exponents_not_checkable() {
        assert!(matches!(
            check_near_gamma_sufficient(&Lomax),
            Err(Error::NotCheckable(_))
        ));
    }

    #[test]
    fn direct_evidence_examples() {
        let u = check_near_gamma_direct(&fam("uniform:lo=0,hi=1"), 200).unwrap();
        assert!(u.pass, "{u:?}");
        assert!((u.epsilon_hat - 1.0).abs() < 0.15, "{u:?}");
        assert!(check_near_gamma_direct(&fam("exp:rate=1"), 200).unwrap().pass);
        assert!(check_near_gamma_direct(&Family::HalfNormal, 200).unwrap().pass);
    }

    #[test]
    fn uniform_epsilon_matches_dense_tabulation() {
        // Oracle: ν(ψ ≤ a) for U[0,1] by tabulating ψ on 10⁵ equispaced
        // points plus a log-spaced tail, counting mass directly.
        let d = fam("uniform:lo=0,hi=1");
        let mass = |a: f64| {
            let n = 100_000;
            let mut m = 0.0;
            for i in 0..n {
                let y = (i as f64 + 0.5) / n as f64;
                if psi(&d, y).unwrap() <= a {
                    m += 1.0 / n as f64;
                }
            }
            m
        };
        let (a1, a2) = (1e-2, 1e-1);
        let oracle = (mass(a2).ln() - mass(a1).ln()) / (a2.ln() - a1.ln());
        let nodes = quantile_grid(&d, 400, REFINED_TAIL);
        let fitted = (small_ball_mass(&nodes, a2).ln() - small_ball_mass(&nodes, a1).ln()) / (a2.ln() - a1.ln());
        assert!((oracle - fitted).abs() < 0.02, "oracle {oracle} fitted {fitted}");
    }

    #[test]
    fn heavy_tail_fails_direct_check() {
        let r = check_near_gamma_direct(&Lomax, 200).unwrap();
        assert!(!r.a_bound_ok, "{r:?}");
        let report = classify_near_gamma(&Lomax, 200).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.sufficient_alpha_ok, None);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(check_near_gamma_direct(&fam("exp:rate=1"), 50).is_err());
    }

    #[test]
    fn sufficient_pass_implies_direct_pass() {
        for s in [
            "exp:rate=1",
            "exp:rate=3",
            "gamma:shape=2",
            "gamma:shape=5,rate=0.5",
            "beta:a=2,b=3",
            "beta:a=0.5,b=0.5",
            "uniform:lo=0,hi=1",
            "uniform:lo=2,hi=3",
            "chi2:k=2,alpha=1",
            "halfnormal",
        ] {
            let r = classify_near_gamma(&fam(s), 200).unwrap();
            if r.verdict == Verdict::SufficientConditionsPass {
                assert!(r.direct_pass);
            }
            assert_ne!(r.verdict, Verdict::Fail, "{s}: {r:?}");
        }
        let h = classify_near_gamma(&Family::HalfNormal, 200).unwrap();
        assert_eq!(h.verdict, Verdict::DirectEvidenceOnly);
    }

    #[test]
    fn report_json_uses_field_names() {
        let r = classify_near_gamma(&fam("exp:rate=1"), 100).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("direct_A_hat").is_some());
        assert_eq!(v["verdict"], "sufficient-conditions-pass");
    }
}
