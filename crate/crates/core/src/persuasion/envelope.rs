use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use crate::agents::grid::ForecastGrid;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::simplex::{lattice_points, SimplexPoint};
use crate::utility::Utility;

/// Value and a supporting hyperplane of a convex function at a point.
///
/// `h(q) ≥ normal · q` for every `q` in the domain, with equality at the
/// queried point.
#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    pub value: f64,
    pub normal: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Facet {
    points: Vec<usize>,
    normal: Vec<f64>,
}

/// Lower convex envelope of finitely many `(point, value)` pairs.
#[derive(Debug)]
pub struct LowerEnvelope {
    points: Vec<SimplexPoint>,
    values: Vec<f64>,
    /// Binary case: lower hull as `(scalar, value)` in increasing scalar.
    hull: Option<Vec<(f64, f64)>>,
    last: Mutex<Option<Facet>>,
}

impl Clone for LowerEnvelope {
    fn clone(&self) -> Self {
        LowerEnvelope {
            points: self.points.clone(),
            values: self.values.clone(),
            hull: self.hull.clone(),
            last: Mutex::new(None),
        }
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl LowerEnvelope {
    pub fn new(points: Vec<SimplexPoint>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::InvalidParameter(
                "envelope needs matching non-empty points and values".into(),
            ));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: 0,
            });
        }
        let hull = (dim == 2).then(|| {
            let mut pts: Vec<(f64, f64)> = points
                .iter()
                .zip(&values)
                .map(|(p, v)| (p.scalar(), *v))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            pts.dedup_by(|b, a| (a.0 - b.0).abs() < 1e-15);
            let mut h: Vec<(f64, f64)> = Vec::new();
            for p in pts {
                while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
                    h.pop();
                }
                h.push(p);
            }
            h
        });
        Ok(LowerEnvelope {
            points,
            values,
            hull,
            last: Mutex::new(None),
        })
    }

    /// Envelope of `q ↦ u(f*(q))` for the nearest-grid-forecast map `f*`,
    /// at its lower-semicontinuous closure.
    ///
    /// Evaluated on the lattice with denominator `2L` (plus `3L` for three
    /// states), which contains every corner of the nearest-vertex cells for
    /// two and three states.
    pub fn for_grid(grid: &ForecastGrid, u: &dyn Utility) -> Self {
        let at_vertex: Vec<f64> = grid.vertices().iter().map(|v| u.value(v)).collect();
        let mut points = lattice_points(grid.dim(), 2 * grid.steps());
        if grid.dim() == 3 {
            points.extend(lattice_points(3, 3 * grid.steps()));
        }
        let values = points
            .iter()
            .map(|q| {
                grid.nearest_all(q)
                    .into_iter()
                    .map(|i| at_vertex[i])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        LowerEnvelope::new(points, values).expect("non-empty lattice")
    }

    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, p: &SimplexPoint) -> Result<f64> {
        Ok(self.support(p)?.value)
    }

    pub fn support(&self, p: &SimplexPoint) -> Result<Support> {
        if p.dim() != self.points[0].dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points[0].dim(),
                got: p.dim(),
            });
        }
        match &self.hull {
            Some(h) => binary_support(h, p.scalar()),
            None => self.lp_support(p),
        }
    }

    fn lp_support(&self, p: &SimplexPoint) -> Result<Support> {
        let d = p.dim();
        let mut last = self.last.lock().expect("envelope cache");
        if let Some(facet) = last.as_ref() {
            if let Some(value) = self.on_facet(facet, p) {
                return Ok(Support {
                    value,
                    normal: facet.normal.clone(),
                });
            }
        }
        let n = self.points.len();
        let mut lp = LinearProgram::new(n, Sense::Minimize);
        lp.set_objective(self.values.clone());
        lp.add_constraint(vec![1.0; n], Relation::Eq, 1.0);
        for w in 1..d {
            lp.add_constraint(
                self.points.iter().map(|q| q.get(w)).collect(),
                Relation::Eq,
                p.get(w),
            );
        }
        let sol = lp.solve()?;
        let y0 = sol.duals[0];
        let normal: Vec<f64> = (0..d)
            .map(|w| if w == 0 { y0 } else { y0 + sol.duals[w] })
            .collect();
        let active: Vec<usize> = (0..n).filter(|&l| sol.x[l] > 1e-12).collect();
        *last = Some(Facet {
            points: active,
            normal: normal.clone(),
        });
        Ok(Support {
            value: sol.objective,
            normal,
        })
    }

    /// Value at `p` when `p` lies in the cached facet's simplex.
    fn on_facet(&self, facet: &Facet, p: &SimplexPoint) -> Option<f64> {
        let d = p.dim();
        if facet.points.len() != d {
            return None;
        }
        let m = DMatrix::from_fn(d, d, |r, c| {
            if r == 0 {
                1.0
            } else {
                self.points[facet.points[c]].get(r)
            }
        });
        let rhs = DVector::from_fn(d, |r, _| if r == 0 { 1.0 } else { p.get(r) });
        let beta = m.lu().solve(&rhs)?;
        if beta.iter().any(|b| !b.is_finite() || *b < -1e-12) {
            return None;
        }
        Some(
            facet
                .points
                .iter()
                .zip(beta.iter())
                .map(|(&l, b)| b * self.values[l])
                .sum(),
        )
    }
}

fn binary_support(h: &[(f64, f64)], x: f64) -> Result<Support> {
    let (lo, hi) = (h[0].0, h[h.len() - 1].0);
    if x < lo - 1e-12 || x > hi + 1e-12 {
        return Err(Error::InvalidPoint(format!(
            "{x} outside envelope domain [{lo}, {hi}]"
        )));
    }
    if h.len() == 1 {
        let v = h[0].1;
        return Ok(Support {
            value: v,
            normal: vec![v, v],
        });
    }
    // right-continuous segment choice: [x_k, x_{k+1})
    let k = h.partition_point(|&(s, _)| s <= x).clamp(1, h.len() - 1) - 1;
    let (a, b) = (h[k], h[k + 1]);
    let slope = (b.1 - a.1) / (b.0 - a.0);
    let value = a.1 + slope * (x - a.0);
    let y0 = a.1 - slope * a.0;
    Ok(Support {
        value,
        normal: vec![y0, y0 + slope],
    })
}

/// Closed convex hull of `q ↦ u(f*(q))` at `p`.
pub fn convex_hull_value(u: &dyn Utility, p: &SimplexPoint, grid: &ForecastGrid) -> Result<f64> {
    LowerEnvelope::for_grid(grid, u).value(p)
}
