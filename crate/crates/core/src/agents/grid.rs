//! Regular forecast lattices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{compositions, SimplexPoint};

/// Distances within this margin count as ties in nearest-vertex queries.
pub const NEAREST_TIE_TOL: f64 = 1e-12;

/// All compositions `Σ n_ω δ_ω` with `n_ω ∈ {0, 1/L, …, 1}` and
/// `L = ⌈√(|Ω|-1) / (2ε)⌉`, ordered lexicographically by composition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct ForecastGrid {
    eps: f64,
    steps: usize,
    compositions: Vec<Vec<usize>>,
    vertices: Vec<SimplexPoint>,
}

#[derive(Clone, Serialize, Deserialize)]
struct GridSpec {
    eps: f64,
    states: usize,
}

impl TryFrom<GridSpec> for ForecastGrid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        ForecastGrid::new(s.eps, s.states)
    }
}

impl From<ForecastGrid> for GridSpec {
    fn from(g: ForecastGrid) -> Self {
        GridSpec {
            eps: g.eps,
            states: g.dim(),
        }
    }
}

impl ForecastGrid {
    pub fn new(eps: f64, n_states: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid precision {eps} must be positive"
            )));
        }
        if n_states < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least two states".into(),
            ));
        }
        let raw = ((n_states - 1) as f64).sqrt() / (2.0 * eps);
        // guard against 10.000000000000002 style overshoot
        let steps = ((raw - 1e-9).ceil() as usize).max(1);
        Ok(ForecastGrid::with_steps(eps, n_states, steps))
    }

    fn with_steps(eps: f64, n_states: usize, steps: usize) -> Self {
        let compositions = compositions(n_states, steps);
        let l = steps as f64;
        let vertices = compositions
            .iter()
            .map(|c| {
                SimplexPoint::new(c.iter().map(|&k| k as f64 / l).collect()).expect("lattice point")
            })
            .collect();
        ForecastGrid {
            eps,
            steps,
            compositions,
            vertices,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Lattice denominator `L`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.compositions[0].len()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[SimplexPoint] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &SimplexPoint {
        &self.vertices[i]
    }

    pub fn composition(&self, i: usize) -> &[usize] {
        &self.compositions[i]
    }

    /// Largest Euclidean distance from a point of the simplex to its nearest
    /// vertex: the covering radius of the scaled `A_{|Ω|-1}` lattice.
    pub fn covering_radius(&self) -> f64 {
        let n = self.dim() as f64;
        let a = (self.dim() / 2) as f64;
        (a * (n - a) / n).sqrt() / self.steps as f64
    }

    /// Index of the nearest vertex; ties go to the lexicographically smallest
    /// composition, which is the lowest index.
    pub fn nearest(&self, p: &SimplexPoint) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.distance(p);
            if d < best_d - NEAREST_TIE_TOL {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// All vertices tied for nearest.
    pub fn nearest_all(&self, p: &SimplexPoint) -> Vec<usize> {
        let d: Vec<f64> = self.vertices.iter().map(|v| v.distance(p)).collect();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        (0..d.len())
            .filter(|&i| d[i] <= min + NEAREST_TIE_TOL)
            .collect()
    }

    pub fn nearest_forecast(&self, p: &SimplexPoint) -> &SimplexPoint {
        &self.vertices[self.nearest(p)]
    }
}

/// `f*(p)`: the grid forecast nearest to `p`.
pub fn nearest_grid_forecast<'g>(p: &SimplexPoint, grid: &'g ForecastGrid) -> &'g SimplexPoint {
    grid.nearest_forecast(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    #[test]
    fn sizes() {
        let g = ForecastGrid::new(0.05, 2).unwrap();
        assert_eq!(g.steps(), 10);
        assert_eq!(g.len(), 11);
        let g3 = ForecastGrid::new(0.1, 3).unwrap();
        // √2 / 0.2 = 7.07 → 8
        assert_eq!(g3.steps(), 8);
        assert_eq!(g3.len(), 45);
        assert_eq!(ForecastGrid::new(0.5, 2).unwrap().steps(), 1);
    }

    #[test]
    fn nearest_examples() {
        let g = ForecastGrid::new(0.05, 2).unwrap();
        assert!((g.nearest_forecast(&b(0.23)).scalar() - 0.2).abs() < 1e-12);
        assert!(g.nearest_forecast(&b(0.7)).approx_eq(&b(0.7), 1e-12));
        let coarse = ForecastGrid::new(0.5, 2).unwrap();
        assert_eq!(coarse.nearest_forecast(&b(0.7)).scalar(), 1.0);
    }

    #[test]
    fn ties_prefer_smallest_composition() {
        let g = ForecastGrid::new(0.05, 2).unwrap();
        // 0.25 is equidistant from (8,2) and (7,3); (7,3) is lexicographically smaller
        let i = g.nearest(&b(0.25));
        assert_eq!(g.composition(i), &[7, 3]);
        assert_eq!(g.nearest_all(&b(0.25)).len(), 2);
    }

    #[test]
    fn covering_radii() {
        let g = ForecastGrid::new(0.05, 2).unwrap();
        assert!((g.covering_radius() - 2f64.sqrt() / 20.0).abs() < 1e-15);
        let g3 = ForecastGrid::new(0.1, 3).unwrap();
        assert!((g3.covering_radius() - (2.0f64 / 3.0).sqrt() / 8.0).abs() < 1e-15);
    }
}
