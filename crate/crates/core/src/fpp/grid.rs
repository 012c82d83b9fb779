use serde::Serialize;

use crate::error::{invalid, Result};

/// A finite box `Π_a [lo_a, hi_a]` of `ℤ^d` with nearest-neighbour edges.
///
/// # Indexing
///
/// Vertices are numbered row-major with the last axis fastest: the vertex
/// `x` has index `Σ_a (x_a − lo_a)·s_a` where `s_{d−1} = 1` and
/// `s_a = s_{a+1}·n_{a+1}`, `n_a = hi_a − lo_a + 1`.
///
/// Edges are identified with `(x, a)`, the edge from `x` to `x + e_a`.
/// They are numbered axis by axis: axis `a` owns the block
/// `[o_a, o_a + c_a)` with `c_a = (n_a − 1)·Π_{b≠a} n_b` and
/// `o_a = Σ_{b<a} c_b`. Inside the block, `(x, a)` has local index equal to
/// the row-major index (last axis fastest) of `x − lo` in the box whose
/// extent along `a` is `n_a − 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    lo: Vec<i64>,
    hi: Vec<i64>,
    #[serde(skip)]
    extent: Vec<usize>,
    #[serde(skip)]
    stride: Vec<usize>,
    #[serde(skip)]
    edge_offset: Vec<usize>,
    /// `edge_stride[a][b]`: row-major strides of the box shortened along `a`.
    #[serde(skip)]
    edge_stride: Vec<Vec<usize>>,
}

impl GridSpec {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        let d = lo.len();
        if d < 2 {
            return invalid(format!("dimension must be at least 2, got {d}"));
        }
        if hi.len() != d {
            return invalid("lower and upper corners differ in dimension");
        }
        if let Some(a) = (0..d).find(|&a| lo[a] > hi[a]) {
            return invalid(format!("empty box along axis {a}: [{}, {}]", lo[a], hi[a]));
        }
        let extent: Vec<usize> = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
        let strides = |ext: &[usize]| {
            let mut s = vec![1usize; d];
            for a in (0..d - 1).rev() {
                s[a] = s[a + 1] * ext[a + 1];
            }
            s
        };
        let stride = strides(&extent);
        let mut edge_offset = vec![0usize; d + 1];
        let mut edge_stride = Vec::with_capacity(d);
        for a in 0..d {
            let mut ext = extent.clone();
            ext[a] -= 1;
            edge_offset[a + 1] = edge_offset[a] + ext.iter().product::<usize>();
            edge_stride.push(strides(&ext));
        }
        Ok(Self {
            lo,
            hi,
            extent,
            stride,
            edge_offset,
            edge_stride,
        })
    }

    /// `[−pad, n+pad] × [−pad, pad]^{d−1}`, the box used for the target `n·e₁`.
    pub fn for_target(d: usize, n: i64, pad: i64) -> Result<Self> {
        if n < 0 || pad < 0 {
            return invalid(format!("n and pad must be nonnegative, got n={n}, pad={pad}"));
        }
        let mut lo = vec![-pad; d];
        let mut hi = vec![pad; d];
        if d > 0 {
            lo[0] = -pad;
            hi[0] = n + pad;
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn vertex_count(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_offset[self.dim()]
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lo)
                .zip(&self.hi)
                .all(|((&c, &l), &h)| l <= c && c <= h)
    }

    pub fn vertex_index(&self, x: &[i64]) -> Result<usize> {
        if !self.contains(x) {
            return invalid(format!(
                "vertex {x:?} lies outside the box {:?}..{:?}",
                self.lo, self.hi
            ));
        }
        Ok(x.iter()
            .zip(&self.lo)
            .zip(&self.stride)
            .map(|((&c, &l), &s)| (c - l) as usize * s)
            .sum())
    }

    pub fn vertex_coords(&self, v: usize) -> Vec<i64> {
        (0..self.dim()).map(|a| self.lo[a] + self.offset(v, a) as i64).collect()
    }

    fn offset(&self, v: usize, a: usize) -> usize {
        (v / self.stride[a]) % self.extent[a]
    }

    /// Index of the edge from `x` to `x + e_axis`, if both ends are in the box.
    pub fn edge_index(&self, x: &[i64], axis: usize) -> Option<usize> {
        if axis >= self.dim() || !self.contains(x) || x[axis] >= self.hi[axis] {
            return None;
        }
        let local: usize = x
            .iter()
            .zip(&self.lo)
            .zip(&self.edge_stride[axis])
            .map(|((&c, &l), &s)| (c - l) as usize * s)
            .sum();
        Some(self.edge_offset[axis] + local)
    }

    /// `(tail, axis)` of edge `e`: the edge runs from `tail` to `tail + e_axis`.
    pub fn edge_tail(&self, e: usize) -> Option<(Vec<i64>, usize)> {
        if e >= self.edge_count() {
            return None;
        }
        let axis = self.edge_offset.partition_point(|&o| o <= e) - 1;
        let mut local = e - self.edge_offset[axis];
        let x = (0..self.dim())
            .map(|b| {
                let s = self.edge_stride[axis][b];
                let c = local / s;
                local %= s;
                self.lo[b] + c as i64
            })
            .collect();
        Some((x, axis))
    }

    /// Vertex indices of both ends of edge `e`.
    pub fn edge_endpoints(&self, e: usize) -> Option<(usize, usize)> {
        let (x, axis) = self.edge_tail(e)?;
        let v = self.vertex_index(&x).ok()?;
        Some((v, v + self.stride[axis]))
    }

    /// Calls `visit(neighbour, edge)` for every edge at vertex `v`.
    #[inline]
    pub(crate) fn for_each_neighbour(&self, v: usize, mut visit: impl FnMut(usize, usize)) {
        let d = self.dim();
        let mut offs = [0usize; 8];
        let offs: &mut [usize] = if d <= 8 {
            &mut offs[..d]
        } else {
            return self.neighbours_slow(v, visit);
        };
        for (a, o) in offs.iter_mut().enumerate() {
            *o = self.offset(v, a);
        }
        for a in 0..d {
            let local = |offs: &[usize]| -> usize { offs.iter().zip(&self.edge_stride[a]).map(|(c, s)| c * s).sum() };
            if offs[a] + 1 < self.extent[a] {
                visit(v + self.stride[a], self.edge_offset[a] + local(offs));
            }
            if offs[a] > 0 {
                offs[a] -= 1;
                let e = self.edge_offset[a] + local(offs);
                offs[a] += 1;
                visit(v - self.stride[a], e);
            }
        }
    }

    fn neighbours_slow(&self, v: usize, mut visit: impl FnMut(usize, usize)) {
        let x = self.vertex_coords(v);
        for a in 0..self.dim() {
            if let Some(e) = self.edge_index(&x, a) {
                visit(v + self.stride[a], e);
            }
            let mut y = x.clone();
            y[a] -= 1;
            if let Some(e) = self.edge_index(&y, a) {
                visit(v - self.stride[a], e);
            }
        }
    }
}

/// Default padding `max(⌈n/2⌉, 16)` around the segment from `0` to `n·e₁`.
pub fn default_pad(n: i64) -> i64 {
    ((n + 1) / 2).max(16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let g = GridSpec::new(vec![0, 0], vec![2, 3]).unwrap();
        assert_eq!(g.vertex_count(), 12);
        // 2·4 horizontal-in-axis-0 plus 3·3 along axis 1.
        assert_eq!(g.edge_count(), 8 + 9);
        let g3 = GridSpec::new(vec![-1, 0, 0], vec![1, 1, 2]).unwrap();
        // Per axis: 2·2·3, 3·1·3, 3·2·2.
        assert_eq!(g3.edge_count(), 12 + 9 + 12);
    }

    #[test]
    fn explicit_layout() {
        // Box {0,1,2} × {0,1}: vertex (x, y) ↦ 2x + y.
        let g = GridSpec::new(vec![0, 0], vec![2, 1]).unwrap();
        assert_eq!(g.vertex_index(&[1, 1]).unwrap(), 3);
        // Axis-0 edges: tails in {0,1} × {0,1}, indices 0..4.
        assert_eq!(g.edge_index(&[0, 0], 0), Some(0));
        assert_eq!(g.edge_index(&[0, 1], 0), Some(1));
        assert_eq!(g.edge_index(&[1, 1], 0), Some(3));
        assert_eq!(g.edge_index(&[2, 0], 0), None);
        // Axis-1 edges: tails in {0,1,2} × {0}, indices 4..7.
        assert_eq!(g.edge_index(&[0, 0], 1), Some(4));
        assert_eq!(g.edge_index(&[2, 0], 1), Some(6));
        assert_eq!(g.edge_index(&[2, 1], 1), None);
        assert_eq!(g.edge_count(), 7);
    }

    #[test]
    fn edge_round_trip() {
        let g = GridSpec::new(vec![-2, 1, 0], vec![1, 3, 2]).unwrap();
        let mut seen = vec![false; g.edge_count()];
        for v in 0..g.vertex_count() {
            let x = g.vertex_coords(v);
            assert_eq!(g.vertex_index(&x).unwrap(), v);
            for a in 0..3 {
                if let Some(e) = g.edge_index(&x, a) {
                    assert!(!seen[e]);
                    seen[e] = true;
                    assert_eq!(g.edge_tail(e).unwrap(), (x.clone(), a));
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn interior_degree_is_2d() {
        let g = GridSpec::new(vec![0, 0, 0], vec![3, 3, 3]).unwrap();
        let mut deg = 0;
        let mut slow = Vec::new();
        let v = g.vertex_index(&[1, 2, 1]).unwrap();
        g.for_each_neighbour(v, |_, _| deg += 1);
        assert_eq!(deg, 6);
        let mut fast = Vec::new();
        for v in 0..g.vertex_count() {
            g.for_each_neighbour(v, |w, e| fast.push((v, w, e)));
            g.neighbours_slow(v, |w, e| slow.push((v, w, e)));
        }
        fast.sort_unstable();
        slow.sort_unstable();
        assert_eq!(fast, slow);
        assert_eq!(fast.len(), 2 * g.edge_count());
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(GridSpec::new(vec![0], vec![3]).is_err());
        assert!(GridSpec::new(vec![0, 0], vec![3]).is_err());
        assert!(GridSpec::new(vec![0, 4], vec![3, 3]).is_err());
        let g = GridSpec::for_target(2, 4, 2).unwrap();
        assert_eq!(g.lo(), &[-2, -2]);
        assert_eq!(g.hi(), &[6, 2]);
        assert!(g.vertex_index(&[7, 0]).is_err());
    }

    #[test]
    fn padding_rule() {
        assert_eq!(default_pad(8), 16);
        assert_eq!(default_pad(33), 17);
        assert_eq!(default_pad(64), 32);
    }
}
