use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Default Gauss–Hermite order.
pub const DEFAULT_ORDER: usize = 64;

/// Largest supported order.
pub const MAX_ORDER: usize = 400;

/// Gauss–Hermite rule normalised against the standard Gaussian measure:
/// `∫ f dγ ≈ Σ wᵢ f(xᵢ)`, exact for polynomials up to degree `2·order − 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    /// Builds the probabilists' Gauss–Hermite rule with `order` nodes.
    ///
    /// Nodes start as eigenvalues of the Jacobi matrix (zero diagonal,
    /// off-diagonal `√k`) and are polished by Newton steps on the
    /// orthonormal Hermite recurrence. Weights are the Christoffel numbers
    /// `1 / Σ_{k<n} q_k(x)²`, accumulated with rescaling so that the outer
    /// weights underflow to zero instead of overflowing.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return invalid("quadrature order must be positive");
        }
        if order > MAX_ORDER {
            return invalid(format!("quadrature order {order} exceeds {MAX_ORDER}"));
        }
        let n = order;
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (qn, qn1, _) = hermite_recurrence(n, *x);
                if qn1 == 0.0 {
                    break;
                }
                *x -= qn / ((n as f64).sqrt() * qn1);
            }
        }
        for i in 0..n / 2 {
            let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                let (_, _, (sum, log_scale)) = hermite_recurrence(n, x);
                (-(sum.ln() + log_scale)).exp()
            })
            .collect();
        Ok(Self { nodes, weights, order })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `∫ f dγ`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_ORDER).expect("default order is valid")
    }
}

/// Orthonormal (under `γ`) Hermite values at `x`: `(q_n, q_{n−1}, (S, L))`
/// with `Σ_{k<n} q_k² = S·e^L`. `q_n` and `q_{n−1}` carry the same
/// unknown factor `e^{−L/2}`, which cancels in Newton steps.
fn hermite_recurrence(n: usize, x: f64) -> (f64, f64, (f64, f64)) {
    const BIG: f64 = 1e100;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = 0.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        sum += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            sum /= BIG * BIG;
            log_scale += 2.0 * BIG.ln();
        }
    }
    (cur, prev, (sum, log_scale))
}
