//! The modified Poincaré inequality on `{0,1}^S × ℝⁿ`:
//!
//! `Var f ≤ Σ_q ‖∇_q f‖₂² + Σ_i ‖∂_i f‖₂² φ(‖∂_i f‖₁ / ‖∂_i f‖₂)`
//!
//! under `λ ⊗ γⁿ`, with `λ` uniform on the cube, `γ` the standard Gaussian
//! and `∇_q f(x, y) = (f(x, y) − f(x ⊕ e_q, y)) / 2`. Every expectation is
//! computed either on a tensor Gauss–Hermite grid or by seeded Monte Carlo.

mod corollaries;
mod registry;

pub use corollaries::{c_k, c_k_quadrature, verify_change_of_variables, verify_chi2_inequality};
pub use registry::{lookup, registry, TestFunction};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::edgedist::open_uniform;
use crate::error::{invalid, Result};
use crate::gauss::{self, QuadratureRule};
use crate::integrate;
use crate::phi::phi;
use crate::seed;

/// Largest continuous dimension accepted in quadrature mode.
pub const MAX_QUAD_DIM: usize = 6;

pub const MIN_MC_SAMPLES: usize = 1000;

/// Monte Carlo runs are split into this many independently seeded batches;
/// the spread of the batch estimates gives the standard errors.
pub const MC_BATCHES: usize = 32;

/// Largest `|S|` for exhaustive enumeration of the cube.
pub const MAX_BITS: usize = 20;

#[derive(Debug, Clone)]
pub enum Method {
    Quadrature(QuadratureRule),
    MonteCarlo { samples: usize, seed: u64 },
}

/// Tensor rule used when none is given: finer in low dimension.
pub fn default_rule(dim: usize) -> Result<QuadratureRule> {
    let order = match dim {
        1 => 128,
        2 => 64,
        3 => 32,
        4 => 16,
        5 => 12,
        6 => 10,
        _ => {
            return invalid(format!(
                "quadrature mode supports 1..={MAX_QUAD_DIM} continuous coordinates, got {dim}"
            ))
        }
    };
    QuadratureRule::gauss_hermite(order)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousTerm {
    pub index: usize,
    pub l1: f64,
    pub l2sq: f64,
    /// `l1 / √l2sq`, or 0 when the gradient vanishes.
    pub ratio: f64,
    pub phi_of_ratio: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub function: String,
    pub lhs_variance: f64,
    pub discrete_term: f64,
    pub continuous_terms: Vec<ContinuousTerm>,
    pub rhs_total: f64,
    /// `rhs_total − lhs_variance`
    pub margin: f64,
    /// `"quad"` or `"mc"`.
    pub method: String,
    pub lhs_stderr: Option<f64>,
    pub rhs_stderr: Option<f64>,
    pub tolerance: f64,
    /// `margin ≥ −tolerance`
    pub holds: bool,
}

/// Weighted sums of everything the inequality needs.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    weight: f64,
    count: usize,
    /// Values are accumulated as `f − shift` to limit cancellation.
    shift: f64,
    s1: f64,
    s2: f64,
    discrete: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Moments {
    pub(crate) fn new(bits: usize, dim: usize, shift: f64) -> Self {
        Self {
            weight: 0.0,
            count: 0,
            shift,
            s1: 0.0,
            s2: 0.0,
            discrete: vec![0.0; bits],
            l1: vec![0.0; dim],
            l2: vec![0.0; dim],
        }
    }

    pub(crate) fn add_value(&mut self, w: f64, value: f64) {
        let c = value - self.shift;
        self.weight += w;
        self.count += 1;
        self.s1 += w * c;
        self.s2 += w * c * c;
    }

    /// `∇_q f` at the current point.
    pub(crate) fn add_discrete(&mut self, w: f64, q: usize, grad: f64) {
        self.discrete[q] += w * grad * grad;
    }

    /// The (possibly modified) gradient in coordinate `i`.
    pub(crate) fn add_gradient(&mut self, w: f64, i: usize, grad: f64) {
        self.l1[i] += w * grad.abs();
        self.l2[i] += w * grad * grad;
    }

    fn merge(&mut self, other: &Self) {
        self.weight += other.weight;
        self.count += other.count;
        self.s1 += other.s1;
        self.s2 += other.s2;
        for (a, b) in self.discrete.iter_mut().zip(&other.discrete) {
            *a += b;
        }
        for (a, b) in self.l1.iter_mut().zip(&other.l1) {
            *a += b;
        }
        for (a, b) in self.l2.iter_mut().zip(&other.l2) {
            *a += b;
        }
    }

    fn variance(&self, unbiased: bool) -> f64 {
        let m = self.s1 / self.weight;
        let v = (self.s2 / self.weight - m * m).max(0.0);
        if unbiased {
            v * self.count as f64 / (self.count as f64 - 1.0)
        } else {
            v
        }
    }
}

/// How the continuous terms enter the bound: `prefactor·l2sq·φ(scale·ratio)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape {
    pub prefactor: f64,
    pub scale: f64,
}

impl Shape {
    pub(crate) const PLAIN: Shape = Shape {
        prefactor: 1.0,
        scale: 1.0,
    };
}

fn bound(m: &Moments, shape: Shape) -> Result<(f64, Vec<ContinuousTerm>, f64)> {
    let w = m.weight;
    let discrete_term = m.discrete.iter().fold(0.0, |acc, d| acc + d / w);
    let mut terms = Vec::with_capacity(m.l1.len());
    for (index, (l1, l2)) in m.l1.iter().zip(&m.l2).enumerate() {
        let (l1, l2sq) = (l1 / w, l2 / w);
        let ratio = if l2sq > 0.0 { l1 / l2sq.sqrt() } else { 0.0 };
        let phi_of_ratio = phi((shape.scale * ratio).min(1.0))?;
        terms.push(ContinuousTerm {
            index,
            l1,
            l2sq,
            ratio,
            phi_of_ratio,
            contribution: shape.prefactor * l2sq * phi_of_ratio,
        });
    }
    let rhs = discrete_term + terms.iter().map(|t| t.contribution).sum::<f64>();
    Ok((discrete_term, terms, rhs))
}

pub(crate) fn quad_report(function: &str, m: &Moments, shape: Shape) -> Result<InequalityReport> {
    let lhs = m.variance(false);
    let (discrete_term, continuous_terms, rhs) = bound(m, shape)?;
    let tolerance = 1e-6 * (1.0 + rhs);
    Ok(InequalityReport {
        function: function.to_string(),
        lhs_variance: lhs,
        discrete_term,
        continuous_terms,
        rhs_total: rhs,
        margin: rhs - lhs,
        method: "quad".into(),
        lhs_stderr: None,
        rhs_stderr: None,
        tolerance,
        holds: rhs - lhs >= -tolerance,
    })
}

/// Runs `draw` once per sample across [`MC_BATCHES`] batches; batch `b`
/// draws from `seed::sub_rng(seed, b)`, so the result does not depend on
/// the thread count.
pub(crate) fn mc_report<F>(
    function: &str,
    samples: usize,
    seed: u64,
    template: &Moments,
    shape: Shape,
    draw: F,
) -> Result<InequalityReport>
where
    F: Fn(&mut ChaCha8Rng, &mut Moments) -> Result<()> + Sync,
{
    if samples < MIN_MC_SAMPLES {
        return invalid(format!(
            "Monte Carlo mode needs at least {MIN_MC_SAMPLES} samples, got {samples}"
        ));
    }
    let batches: Vec<Moments> = (0..MC_BATCHES)
        .into_par_iter()
        .map(|b| {
            let size = samples * (b + 1) / MC_BATCHES - samples * b / MC_BATCHES;
            let mut rng = seed::sub_rng(seed, b as u64);
            let mut m = template.clone();
            for _ in 0..size {
                draw(&mut rng, &mut m)?;
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;

    let mut total = template.clone();
    for b in &batches {
        total.merge(b);
    }
    let lhs = total.variance(true);
    let (discrete_term, continuous_terms, rhs) = bound(&total, shape)?;

    let mut lhs_b = Vec::with_capacity(MC_BATCHES);
    let mut rhs_b = Vec::with_capacity(MC_BATCHES);
    for b in &batches {
        lhs_b.push(b.variance(true));
        rhs_b.push(bound(b, shape)?.2);
    }
    let lhs_se = batch_stderr(&lhs_b);
    let rhs_se = batch_stderr(&rhs_b);
    let tolerance = 3.0 * lhs_se.hypot(rhs_se);
    Ok(InequalityReport {
        function: function.to_string(),
        lhs_variance: lhs,
        discrete_term,
        continuous_terms,
        rhs_total: rhs,
        margin: rhs - lhs,
        method: "mc".into(),
        lhs_stderr: Some(lhs_se),
        rhs_stderr: Some(rhs_se),
        tolerance,
        holds: rhs - lhs >= -tolerance,
    })
}

/// Standard error of the mean of equally sized batch estimates.
fn batch_stderr(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    gauss::quantile(open_uniform(rng))
}

fn check_bits(f: &TestFunction) -> Result<()> {
    if f.bits() > MAX_BITS {
        return invalid(format!(
            "at most {MAX_BITS} discrete coordinates are supported, got {}",
            f.bits()
        ));
    }
    Ok(())
}

/// Adds one point: value, discrete gradients and partials.
fn accumulate(f: &TestFunction, w: f64, x: &mut [bool], y: &[f64], m: &mut Moments) {
    let value = f.eval(x, y);
    m.add_value(w, value);
    for q in 0..x.len() {
        x[q] = !x[q];
        let flipped = f.eval(x, y);
        x[q] = !x[q];
        m.add_discrete(w, q, 0.5 * (value - flipped));
    }
    for i in 0..y.len() {
        m.add_gradient(w, i, f.partial(x, y, i));
    }
}

fn bits_of(mask: usize, x: &mut [bool]) {
    for (q, b) in x.iter_mut().enumerate() {
        *b = mask >> q & 1 == 1;
    }
}

/// Calls `visit(weight, y)` for every node of the tensor rule in `dim` dimensions.
fn for_each_node(rule: &QuadratureRule, dim: usize, mut visit: impl FnMut(f64, &[f64])) {
    let order = rule.order();
    let (nodes, weights) = (rule.nodes(), rule.weights());
    let mut idx = vec![0usize; dim];
    let mut y = vec![nodes[0]; dim];
    loop {
        let w: f64 = idx.iter().map(|&k| weights[k]).product();
        visit(w, &y);
        let mut a = 0;
        loop {
            if a == dim {
                return;
            }
            idx[a] += 1;
            if idx[a] < order {
                y[a] = nodes[idx[a]];
                break;
            }
            idx[a] = 0;
            y[a] = nodes[0];
            a += 1;
        }
    }
}

/// Half-width and panel count of [`AbsRule`].
const ABS_HALF_WIDTH: f64 = 12.0;
const ABS_PANELS: usize = 32;

/// `∫ |g| dγ` over `[−12, 12]` by 8-point Gauss–Legendre panels. A panel
/// is split at every sign change of `g` among its nodes, so kinks of `|g|`
/// fall on piece boundaries; Gauss–Hermite converges only like `1/order`
/// for such integrands.
struct AbsRule {
    gl: (Vec<f64>, Vec<f64>),
    /// Node positions and `γ`-weights, panel by panel.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AbsRule {
    fn new() -> Self {
        let gl = integrate::gauss_legendre(8);
        let h = 2.0 * ABS_HALF_WIDTH / ABS_PANELS as f64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in 0..ABS_PANELS {
            let c = -ABS_HALF_WIDTH + (p as f64 + 0.5) * h;
            for (&x, &w) in gl.0.iter().zip(&gl.1) {
                let t = c + 0.5 * h * x;
                nodes.push(t);
                weights.push(0.5 * h * w * gauss::pdf(t));
            }
        }
        Self { gl, nodes, weights }
    }

    fn piece(&self, g: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let (xs, ws) = &self.gl;
        r * xs
            .iter()
            .zip(ws)
            .map(|(&x, &w)| {
                let t = c + r * x;
                w * g(t).abs() * gauss::pdf(t)
            })
            .sum::<f64>()
    }

    fn integrate(&self, g: &mut impl FnMut(f64) -> f64) -> f64 {
        let k = self.gl.0.len();
        let h = 2.0 * ABS_HALF_WIDTH / ABS_PANELS as f64;
        let mut total = 0.0;
        let mut left = (-ABS_HALF_WIDTH, g(-ABS_HALF_WIDTH));
        let mut scan = Vec::with_capacity(k + 2);
        for p in 0..ABS_PANELS {
            let a = -ABS_HALF_WIDTH + p as f64 * h;
            let b = a + h;
            let nodes = &self.nodes[p * k..(p + 1) * k];
            scan.clear();
            scan.push(left);
            scan.extend(nodes.iter().map(|&t| (t, g(t))));
            let right = (b, g(b));
            scan.push(right);
            let roots: Vec<f64> = scan
                .windows(2)
                .filter(|s| s[0].1 * s[1].1 < 0.0)
                .map(|s| bisect_root(g, s[0], s[1]))
                .collect();
            if roots.is_empty() {
                let ws = &self.weights[p * k..(p + 1) * k];
                total += ws.iter().zip(&scan[1..=k]).map(|(w, &(_, v))| w * v.abs()).sum::<f64>();
            } else {
                let mut from = a;
                for &root in roots.iter().chain(std::iter::once(&b)) {
                    total += self.piece(g, from, root);
                    from = root;
                }
            }
            left = right;
        }
        total
    }
}

fn bisect_root(g: &mut impl FnMut(f64) -> f64, (mut a, ga): (f64, f64), (mut b, _): (f64, f64)) -> f64 {
    let neg_at_a = ga < 0.0;
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `‖∂_i f‖₁` for each `i`: tensor rule in the other coordinates,
/// [`AbsRule`] along `y_i`.
fn quad_l1(f: &TestFunction, rule: &QuadratureRule) -> Vec<f64> {
    let rule_1d = AbsRule::new();
    let cube = 1usize << f.bits();
    let px = 1.0 / cube as f64;
    let mut x = vec![false; f.bits()];
    let mut y = vec![0.0; f.dim()];
    (0..f.dim())
        .map(|i| {
            let mut sum = 0.0;
            for_each_node(rule, f.dim() - 1, |w, rest| {
                let mut k = 0;
                for (j, slot) in y.iter_mut().enumerate() {
                    if j != i {
                        *slot = rest[k];
                        k += 1;
                    }
                }
                for mask in 0..cube {
                    bits_of(mask, &mut x);
                    let mut yy = y.clone();
                    let mut g = |t: f64| {
                        yy[i] = t;
                        f.partial(&x, &yy, i)
                    };
                    sum += w * px * rule_1d.integrate(&mut g);
                }
            });
            sum
        })
        .collect()
}

fn quad_moments(f: &TestFunction, rule: &QuadratureRule) -> Result<Moments> {
    check_bits(f)?;
    if f.dim() > MAX_QUAD_DIM {
        return invalid(format!(
            "quadrature mode supports at most {MAX_QUAD_DIM} continuous coordinates, got {}",
            f.dim()
        ));
    }
    let cube = 1usize << f.bits();
    let shift = f.eval(&vec![false; f.bits()], &vec![0.0; f.dim()]);
    let mut m = Moments::new(f.bits(), f.dim(), shift);
    let mut x = vec![false; f.bits()];
    let px = 1.0 / cube as f64;
    for_each_node(rule, f.dim(), |w, y| {
        for mask in 0..cube {
            bits_of(mask, &mut x);
            accumulate(f, w * px, &mut x, y, &mut m);
        }
    });
    let weight = m.weight;
    for (slot, l1) in m.l1.iter_mut().zip(quad_l1(f, rule)) {
        *slot = l1 * weight;
    }
    Ok(m)
}

/// `‖∇_q f‖₂²` under `λ ⊗ γⁿ` on a tensor rule.
pub fn discrete_gradient_norm(f: &TestFunction, q: usize, rule: &QuadratureRule) -> Result<f64> {
    if q >= f.bits() {
        return invalid(format!("coordinate {q} out of range for {} bits", f.bits()));
    }
    let m = quad_moments(f, rule)?;
    Ok(m.discrete[q] / m.weight)
}

pub fn verify_modified_poincare(f: &TestFunction, method: &Method) -> Result<InequalityReport> {
    match method {
        Method::Quadrature(rule) => quad_report(f.id(), &quad_moments(f, rule)?, Shape::PLAIN),
        Method::MonteCarlo { samples, seed } => {
            check_bits(f)?;
            let shift = f.eval(&vec![false; f.bits()], &vec![0.0; f.dim()]);
            let template = Moments::new(f.bits(), f.dim(), shift);
            mc_report(f.id(), *samples, *seed, &template, Shape::PLAIN, |rng, m| {
                use rand::Rng;
                let mut x: Vec<bool> = (0..f.bits()).map(|_| rng.random()).collect();
                let y: Vec<f64> = (0..f.dim()).map(|_| standard_normal(rng)).collect();
                accumulate(f, 1.0, &mut x, &y, m);
                Ok(())
            })
        }
    }
}

/// Both sides of `Var f = E_γ(Var_λ f) + Var_γ(E_λ f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceSplit {
    pub lhs: f64,
    pub mean_cube_variance: f64,
    pub variance_of_cube_mean: f64,
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Exact up to rounding on a tensor rule; every sum is two-pass.
pub fn verify_variance_split(f: &TestFunction, rule: &QuadratureRule) -> Result<VarianceSplit> {
    check_bits(f)?;
    if f.dim() > MAX_QUAD_DIM {
        return invalid(format!(
            "quadrature mode supports at most {MAX_QUAD_DIM} continuous coordinates"
        ));
    }
    let cube = 1usize << f.bits();
    let mut x = vec![false; f.bits()];
    let mut values = Vec::new();
    let mut node_weights = Vec::new();
    for_each_node(rule, f.dim(), |w, y| {
        node_weights.push(w);
        for mask in 0..cube {
            bits_of(mask, &mut x);
            values.push(f.eval(&x, y));
        }
    });
    let cube_f = cube as f64;
    let total_w: f64 = node_weights.iter().sum();
    let cube_means: Vec<f64> = values.chunks(cube).map(|c| c.iter().sum::<f64>() / cube_f).collect();
    let mean = node_weights.iter().zip(&cube_means).map(|(w, m)| w * m).sum::<f64>() / total_w;
    let lhs = node_weights
        .iter()
        .zip(values.chunks(cube))
        .map(|(w, c)| w * c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / cube_f)
        .sum::<f64>()
        / total_w;
    let mean_cube_variance = node_weights
        .iter()
        .zip(values.chunks(cube).zip(&cube_means))
        .map(|(w, (c, m))| w * c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / cube_f)
        .sum::<f64>()
        / total_w;
    let variance_of_cube_mean = node_weights
        .iter()
        .zip(&cube_means)
        .map(|(w, m)| w * (m - mean).powi(2))
        .sum::<f64>()
        / total_w;
    let rhs = mean_cube_variance + variance_of_cube_mean;
    Ok(VarianceSplit {
        lhs,
        mean_cube_variance,
        variance_of_cube_mean,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorisationReport {
    pub bits: usize,
    pub variance: f64,
    /// `‖∇_q g‖₂²` for each `q`.
    pub gradient_terms: Vec<f64>,
    pub gradient_sum: f64,
    pub holds: bool,
}

/// `Var_λ g ≤ Σ_q ‖∇_q g‖₂²` by enumerating the cube. Bit `q` of the index
/// is coordinate `q`.
pub fn verify_tensorisation(bits: usize, g: impl Fn(&[bool]) -> f64) -> Result<TensorisationReport> {
    if bits > MAX_BITS {
        return invalid(format!("at most {MAX_BITS} bits can be enumerated, got {bits}"));
    }
    let size = 1usize << bits;
    let mut x = vec![false; bits];
    let values: Vec<f64> = (0..size)
        .map(|mask| {
            bits_of(mask, &mut x);
            g(&x)
        })
        .collect();
    let n = size as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let gradient_terms: Vec<f64> = (0..bits)
        .map(|q| {
            values
                .iter()
                .enumerate()
                .map(|(m, v)| 0.25 * (v - values[m ^ (1 << q)]).powi(2))
                .sum::<f64>()
                / n
        })
        .collect();
    let gradient_sum = gradient_terms.iter().sum::<f64>();
    Ok(TensorisationReport {
        bits,
        variance,
        holds: variance <= gradient_sum + 1e-12 * gradient_sum.max(1.0),
        gradient_terms,
        gradient_sum,
    })
}
