//! Probability vectors over a finite state set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction tolerance for sums and negative entries.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Two forecasts are the same ledger key when every component is this close.
pub const FORECAST_TOL: f64 = 1e-12;

/// A point of the probability simplex over the states.
///
/// Used for beliefs, forecasts, conditionals and empirical distributions.
/// Deserializes from a vector or, on two states, from the scalar
/// probability of the second state.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates `weights` as a probability vector.
    ///
    /// Negative entries down to `-1e-12` are clamped and the sum is renormalized
    /// when it is within `1e-12` of one; anything further off is rejected.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPoint("empty vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "non-finite entry in {weights:?}"
            )));
        }
        if let Some(w) = weights.iter().find(|&&w| w < -SIMPLEX_TOL) {
            return Err(Error::InvalidPoint(format!("negative entry {w}")));
        }
        let mut weights: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidPoint(format!("entries sum to {total}")));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(SimplexPoint(weights))
    }

    /// Normalizes a nonnegative vector with positive mass.
    ///
    /// This is the path for computed quantities (posteriors, empirical
    /// frequencies, solver outputs) whose sums carry rounding error.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "non-finite entry in {weights:?}"
            )));
        }
        let scale = weights.iter().map(|w| w.abs()).fold(0.0, f64::max).max(1.0);
        if let Some(w) = weights.iter().find(|&&w| w < -1e-9 * scale) {
            return Err(Error::InvalidPoint(format!("negative entry {w}")));
        }
        let clamped: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPoint("zero total mass".into()));
        }
        Ok(SimplexPoint(
            clamped.into_iter().map(|w| w / total).collect(),
        ))
    }

    /// Binary shorthand: `q` is the probability of the second-listed state.
    pub fn binary(q: f64) -> Result<Self> {
        if !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&q) {
            return Err(Error::InvalidPoint(format!(
                "binary probability {q} outside [0, 1]"
            )));
        }
        let q = q.clamp(0.0, 1.0);
        Ok(SimplexPoint(vec![1.0 - q, q]))
    }

    pub fn dirac(dim: usize, state: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[state] = 1.0;
        SimplexPoint(w)
    }

    pub fn uniform(dim: usize) -> Self {
        SimplexPoint(vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }

    /// Probability of the second-listed state (binary shorthand).
    pub fn scalar(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(0.0)
    }

    pub fn distance(&self, other: &SimplexPoint) -> f64 {
        euclidean(&self.0, &other.0)
    }

    /// Component-wise comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &SimplexPoint, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Convex combination `Σ w_i p_i` of points with weights summing to one.
    pub fn mixture<'a>(
        weighted: impl IntoIterator<Item = (f64, &'a SimplexPoint)>,
    ) -> Result<SimplexPoint> {
        let mut acc: Option<Vec<f64>> = None;
        for (w, p) in weighted {
            let v = acc.get_or_insert_with(|| vec![0.0; p.dim()]);
            if v.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: v.len(),
                    got: p.dim(),
                });
            }
            for (a, x) in v.iter_mut().zip(&p.0) {
                *a += w * x;
            }
        }
        let v = acc.ok_or_else(|| Error::InvalidPoint("empty mixture".into()))?;
        SimplexPoint::normalized(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPoint {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl TryFrom<RawPoint> for SimplexPoint {
    type Error = Error;

    fn try_from(r: RawPoint) -> Result<Self> {
        match r {
            RawPoint::Scalar(q) => SimplexPoint::binary(q),
            RawPoint::Vector(v) => SimplexPoint::new(v),
        }
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

impl fmt::Debug for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// All compositions of `steps` into `dim` nonnegative parts, in ascending
/// lexicographic order.
pub fn compositions(dim: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim > 0 {
        rec(dim, steps, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// Points `n/steps` of the regular simplex lattice, in composition order.
pub fn lattice_points(dim: usize, steps: usize) -> Vec<SimplexPoint> {
    let l = steps as f64;
    compositions(dim, steps)
        .into_iter()
        .map(|c| SimplexPoint(c.into_iter().map(|k| k as f64 / l).collect()))
        .collect()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Ordered, uniquely labelled finite state set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidParameter(
                "state space needs at least two states".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate state label {l:?}"
                )));
            }
        }
        Ok(StateSpace { labels })
    }

    /// States labelled `"0"`, `"1"`, ...
    pub fn indexed(n: usize) -> Result<Self> {
        StateSpace::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn check(&self, p: &SimplexPoint) -> Result<()> {
        if p.dim() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: p.dim(),
            });
        }
        Ok(())
    }
}
