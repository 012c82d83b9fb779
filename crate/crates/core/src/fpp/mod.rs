//! First passage percolation on a finite box of `ℤ^d`.
//!
//! `d_x(u, v)` is the least total weight of a lattice path from `u` to `v`
//! inside the box. Distances are exact: Dijkstra with a binary heap, a
//! deterministic predecessor rule (smallest edge index among equal labels)
//! and the geodesic read back from predecessor links.

mod field;
mod grid;

pub use field::WeightField;
pub use grid::{default_pad, GridSpec};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::averaging;
use crate::error::{domain, invalid, Error, Result};

/// Two labels closer than this (relative to `max(1, label)`) count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Increment used by the finite-difference check of [`edge_derivative`].
pub const FD_STEP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassageResult {
    pub distance: f64,
    /// Edges of the geodesic in order from `source` to `target`.
    pub geodesic_edges: Vec<usize>,
    pub source: Vec<i64>,
    pub target: Vec<i64>,
}

#[derive(Clone, Copy)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

struct Labels {
    dist: Vec<f64>,
    pred: Vec<usize>,
}

const NONE: usize = usize::MAX;

fn dijkstra(field: &WeightField, source: usize, target: usize) -> Labels {
    let grid = field.grid();
    let weights = field.weights();
    let n = grid.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(Entry { dist: du, vertex: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == target {
            break;
        }
        grid.for_each_neighbour(u, |w, e| {
            if done[w] {
                return;
            }
            let nd = du + weights[e];
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = e;
                heap.push(Entry { dist: nd, vertex: w });
            } else if nd == dist[w] && e < pred[w] {
                pred[w] = e;
            }
        });
    }
    Labels { dist, pred }
}

fn other_end(grid: &GridSpec, e: usize, v: usize) -> usize {
    let (a, b) = grid.edge_endpoints(e).expect("edge in range");
    if a == v {
        b
    } else {
        a
    }
}

/// Geodesic as (edges, vertices), both from source to target.
fn trace(grid: &GridSpec, labels: &Labels, source: usize, target: usize) -> (Vec<usize>, Vec<usize>) {
    let mut edges = Vec::new();
    let mut vertices = vec![target];
    let mut v = target;
    while v != source {
        let e = labels.pred[v];
        edges.push(e);
        v = other_end(grid, e, v);
        vertices.push(v);
    }
    edges.reverse();
    vertices.reverse();
    (edges, vertices)
}

fn endpoints(field: &WeightField, u: &[i64], v: &[i64]) -> Result<(usize, usize)> {
    let grid = field.grid();
    Ok((grid.vertex_index(u)?, grid.vertex_index(v)?))
}

/// `d_x(u, v)` and its geodesic.
pub fn passage_time(field: &WeightField, u: &[i64], v: &[i64]) -> Result<PassageResult> {
    let (s, t) = endpoints(field, u, v)?;
    let labels = dijkstra(field, s, t);
    let distance = labels.dist[t];
    if !distance.is_finite() {
        return domain(format!("no finite path from {u:?} to {v:?}"));
    }
    let (geodesic_edges, _) = trace(field.grid(), &labels, s, t);
    debug_assert!({
        let sum: f64 = geodesic_edges.iter().map(|&e| field.weight(e)).sum();
        (sum - distance).abs() <= 1e-9 * distance.max(1.0)
    });
    Ok(PassageResult {
        distance,
        geodesic_edges,
        source: u.to_vec(),
        target: v.to_vec(),
    })
}

/// Like [`passage_time`], but fails with [`Error::GeodesicTie`] when a second
/// path is optimal within [`TIE_TOLERANCE`].
///
/// Any other optimal path leaves the reported geodesic and rejoins it at some
/// vertex, which then has two tight incoming edges; checking the geodesic's
/// own vertices is therefore enough.
pub fn passage_time_unique(field: &WeightField, u: &[i64], v: &[i64]) -> Result<PassageResult> {
    let (s, t) = endpoints(field, u, v)?;
    let labels = dijkstra(field, s, t);
    if !labels.dist[t].is_finite() {
        return domain(format!("no finite path from {u:?} to {v:?}"));
    }
    let grid = field.grid();
    let (edges, vertices) = trace(grid, &labels, s, t);
    for &z in vertices.iter().skip(1) {
        let dz = labels.dist[z];
        let tol = TIE_TOLERANCE * dz.max(1.0);
        let mut tie = None;
        grid.for_each_neighbour(z, |p, e| {
            if e == labels.pred[z] {
                return;
            }
            let gap = (labels.dist[p] + field.weight(e) - dz).abs();
            if gap <= tol {
                tie = Some(gap);
            }
        });
        if let Some(gap) = tie {
            return Err(Error::GeodesicTie { vertex: z, gap });
        }
    }
    Ok(PassageResult {
        distance: labels.dist[t],
        geodesic_edges: edges,
        source: u.to_vec(),
        target: v.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeDerivative {
    /// `1` iff the edge lies on the unique geodesic.
    pub value: u8,
    /// `f_v(x + δ·1_e) − f_v(x)` with `δ =` [`FD_STEP`].
    pub fd_increment: f64,
    /// `|fd_increment − δ·value| ≤ 1e-12`.
    pub fd_agrees: bool,
}

/// `∂f_v/∂x_e` for `f_v = d_x(0, v)`, with a finite-difference check.
pub fn edge_derivative(field: &WeightField, v: &[i64], e: usize) -> Result<EdgeDerivative> {
    if e >= field.grid().edge_count() {
        return invalid(format!("edge {e} out of range"));
    }
    let origin = vec![0; field.grid().dim()];
    let base = passage_time_unique(field, &origin, v)?;
    let value = u8::from(base.geodesic_edges.contains(&e));
    let bumped = field.with_weight(e, field.weight(e) + FD_STEP)?;
    let fd_increment = passage_time(&bumped, &origin, v)?.distance - base.distance;
    let fd_agrees = (fd_increment - FD_STEP * value as f64).abs() <= 1e-12;
    Ok(EdgeDerivative {
        value,
        fd_increment,
        fd_agrees,
    })
}

/// `y ↦ d_{(x^{−e}, y)}(0, v)` on a grid, compared with `min(g(0) + y, C)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseCurve {
    pub edge: usize,
    pub y: Vec<f64>,
    pub distance: Vec<f64>,
    /// Passage time with `x_e = 0`.
    pub g0: f64,
    /// Passage time with edge `e` removed.
    pub cap: f64,
    /// Breakpoint `C − g(0)`.
    pub y_inf: f64,
    pub max_deviation: f64,
    pub nondecreasing: bool,
    pub lipschitz: bool,
}

impl ResponseCurve {
    /// Rows `y,distance` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,distance\n");
        for (y, d) in self.y.iter().zip(&self.distance) {
            out.push_str(&format!("{y},{d}\n"));
        }
        out
    }
}

pub fn single_edge_response(field: &WeightField, v: &[i64], e: usize, y_grid: &[f64]) -> Result<ResponseCurve> {
    if e >= field.grid().edge_count() {
        return invalid(format!("edge {e} out of range"));
    }
    if y_grid.is_empty() || y_grid.windows(2).any(|w| !(w[0] < w[1])) || !(y_grid[0] >= 0.0) {
        return invalid("y grid must be nonempty, nonnegative and strictly increasing");
    }
    let origin = vec![0; field.grid().dim()];
    let at = |y: f64| -> Result<f64> { Ok(passage_time(&field.with_weight(e, y)?, &origin, v)?.distance) };
    let g0 = at(0.0)?;
    let cap = at(f64::INFINITY)?;
    let distance = y_grid.iter().map(|&y| at(y)).collect::<Result<Vec<_>>>()?;
    let max_deviation = y_grid
        .iter()
        .zip(&distance)
        .map(|(&y, &d)| (d - (g0 + y).min(cap)).abs())
        .fold(0.0, f64::max);
    let slack = 1e-12 * cap.max(1.0);
    let nondecreasing = distance.windows(2).all(|w| w[1] >= w[0] - slack);
    let lipschitz = distance
        .windows(2)
        .zip(y_grid.windows(2))
        .all(|(d, y)| (d[1] - d[0]).abs() <= y[1] - y[0] + slack);
    Ok(ResponseCurve {
        edge: e,
        y: y_grid.to_vec(),
        distance,
        g0,
        cap,
        y_inf: cap - g0,
        max_deviation,
        nondecreasing,
        lipschitz,
    })
}

/// `points` equally spaced values from 0 to twice the breakpoint (at least 1).
pub fn default_y_grid(field: &WeightField, v: &[i64], e: usize, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return invalid("response grid needs at least 2 points");
    }
    if e >= field.grid().edge_count() {
        return invalid(format!("edge {e} out of range"));
    }
    let origin = vec![0; field.grid().dim()];
    let g0 = passage_time(&field.with_weight(e, 0.0)?, &origin, v)?.distance;
    let cap = passage_time(&field.with_weight(e, f64::INFINITY)?, &origin, v)?.distance;
    let y_max = (2.0 * (cap - g0)).max(1.0);
    Ok((0..points).map(|i| y_max * i as f64 / (points - 1) as f64).collect())
}

/// `f̃(a, x) = d_x(z(a), v + z(a))` with `z(a)` from the averaging function.
pub fn averaged_passage_time(a: &[Vec<bool>], field: &WeightField, v: &[i64], m: u32) -> Result<f64> {
    let grid = field.grid();
    if a.len() != grid.dim() || v.len() != grid.dim() {
        return invalid(format!("bit matrix and target need {} rows/coordinates", grid.dim()));
    }
    let z: Vec<i64> = averaging::random_vertex(a, m)?.into_iter().map(i64::from).collect();
    let vz: Vec<i64> = v.iter().zip(&z).map(|(a, b)| a + b).collect();
    if !grid.contains(&z) || !grid.contains(&vz) {
        return domain(format!("box too small for the shifted endpoints {z:?} and {vz:?}"));
    }
    Ok(passage_time(field, &z, &vz)?.distance)
}

/// Default box and field for `f_v`, `v = n·e₁`.
pub fn target_field(
    d: usize,
    n: i64,
    pad: Option<i64>,
    dist: &dyn crate::edgedist::EdgeDistribution,
    seed: u64,
) -> Result<(WeightField, Vec<i64>)> {
    if n < 1 {
        return invalid(format!("n must be at least 1, got {n}"));
    }
    let grid = GridSpec::for_target(d, n, pad.unwrap_or_else(|| default_pad(n)))?;
    let mut v = vec![0; d];
    v[0] = n;
    Ok((WeightField::sample(grid, dist, seed), v))
}
