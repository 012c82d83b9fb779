use serde::Serialize;

use super::GridSpec;
use crate::edgedist::{open_uniform, EdgeDistribution};
use crate::error::{invalid, Result};
use crate::seed;

/// Edge weights on a [`GridSpec`], indexed by edge index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightField {
    grid: GridSpec,
    weights: Vec<f64>,
    /// `(distribution spec, seed)` for sampled fields.
    provenance: Option<(String, u64)>,
}

impl WeightField {
    /// i.i.d. weights from `dist`.
    ///
    /// Edge `e` receives `H⁻¹(U_e)`, where `U_0, U_1, …` are drawn in edge
    /// order from a ChaCha8 stream seeded with `seed`, each as
    /// `((w >> 11) + ½)·2⁻⁵³` for the next 64-bit word `w`.
    pub fn sample(grid: GridSpec, dist: &dyn EdgeDistribution, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let weights = (0..grid.edge_count())
            .map(|_| dist.quantile(open_uniform(&mut rng)))
            .collect();
        Self {
            grid,
            weights,
            provenance: Some((dist.name(), seed)),
        }
    }

    pub fn constant(grid: GridSpec, w: f64) -> Result<Self> {
        Self::from_weights(grid.clone(), vec![w; grid.edge_count()])
    }

    pub fn from_weights(grid: GridSpec, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.edge_count() {
            return invalid(format!("expected {} weights, got {}", grid.edge_count(), weights.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return invalid(format!("edge weights must be nonnegative, found {w}"));
        }
        Ok(Self {
            grid,
            weights,
            provenance: None,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn provenance(&self) -> Option<(&str, u64)> {
        self.provenance.as_ref().map(|(s, seed)| (s.as_str(), *seed))
    }

    /// Copy with edge `e` set to `w`; `w = ∞` removes the edge.
    pub fn with_weight(&self, e: usize, w: f64) -> Result<Self> {
        if e >= self.weights.len() {
            return invalid(format!("edge {e} out of range (box has {} edges)", self.weights.len()));
        }
        if !(w >= 0.0) {
            return invalid(format!("edge weight must be nonnegative, got {w}"));
        }
        let mut out = self.clone();
        out.weights[e] = w;
        out.provenance = None;
        Ok(out)
    }

    /// The same weights seen on a sub-box.
    pub fn restrict(&self, sub: &GridSpec) -> Result<Self> {
        if !(self.grid.contains(sub.lo()) && self.grid.contains(sub.hi())) {
            return invalid("restriction box is not contained in the field's box");
        }
        let weights = (0..sub.edge_count())
            .map(|e| {
                let (x, axis) = sub.edge_tail(e).expect("edge in range");
                self.weights[self.grid.edge_index(&x, axis).expect("edge inside the larger box")]
            })
            .collect();
        Ok(Self {
            grid: sub.clone(),
            weights,
            provenance: None,
        })
    }
}
