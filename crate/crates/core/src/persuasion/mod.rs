//! Static persuasion over mean-preserving contractions.

mod envelope;
mod mpc;
mod solve;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::random::sample_index;
use crate::simplex::{SimplexPoint, FORECAST_TOL};

pub use envelope::{convex_hull_value, LowerEnvelope, Support};
pub use mpc::{distribution_to_experiment, is_garbling, is_mpc, FeasibilityCheck};
pub use solve::{concavify_restricted, default_candidates, solve_persuasion, PersuasionSolution};

/// Row sums of stochastic matrices must be this close to one.
pub const ROW_TOL: f64 = 1e-9;

/// Finitely supported distribution over the simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAtomic")]
pub struct AtomicDistribution {
    masses: Vec<f64>,
    points: Vec<SimplexPoint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtomic {
    masses: Vec<f64>,
    points: Vec<SimplexPoint>,
}

impl TryFrom<RawAtomic> for AtomicDistribution {
    type Error = Error;

    fn try_from(raw: RawAtomic) -> Result<Self> {
        AtomicDistribution::new(raw.masses, raw.points)
    }
}

impl AtomicDistribution {
    /// Validates masses, drops zero-mass atoms and merges duplicate points.
    pub fn new(masses: Vec<f64>, points: Vec<SimplexPoint>) -> Result<Self> {
        if masses.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: masses.len(),
                got: points.len(),
            });
        }
        if masses.iter().any(|m| !m.is_finite() || *m < -1e-12) {
            return Err(Error::InvalidDistribution(format!(
                "invalid masses {masses:?}"
            )));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        let dim = points.first().map(SimplexPoint::dim);
        let mut out_m: Vec<f64> = Vec::with_capacity(masses.len());
        let mut out_p: Vec<SimplexPoint> = Vec::with_capacity(points.len());
        for (m, p) in masses.into_iter().zip(points) {
            if Some(p.dim()) != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim.unwrap_or(0),
                    got: p.dim(),
                });
            }
            if m <= 0.0 {
                continue;
            }
            match out_p.iter().position(|q| q.approx_eq(&p, FORECAST_TOL)) {
                Some(k) => out_m[k] += m,
                None => {
                    out_m.push(m);
                    out_p.push(p);
                }
            }
        }
        if out_m.is_empty() {
            return Err(Error::InvalidDistribution(
                "no atom with positive mass".into(),
            ));
        }
        let total: f64 = out_m.iter().sum();
        for m in &mut out_m {
            *m /= total;
        }
        Ok(AtomicDistribution {
            masses: out_m,
            points: out_p,
        })
    }

    pub fn dirac(p: SimplexPoint) -> Self {
        AtomicDistribution {
            masses: vec![1.0],
            points: vec![p],
        }
    }

    /// Binary shorthand: atoms given as probabilities of the second state.
    pub fn binary(masses: &[f64], scalars: &[f64]) -> Result<Self> {
        let points = scalars
            .iter()
            .map(|&q| SimplexPoint::binary(q))
            .collect::<Result<_>>()?;
        AtomicDistribution::new(masses.to_vec(), points)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, &SimplexPoint)> {
        self.masses.iter().copied().zip(&self.points)
    }

    /// Mass on the atom at `p`, zero when absent.
    pub fn mass_of(&self, p: &SimplexPoint) -> f64 {
        self.points
            .iter()
            .position(|q| q.approx_eq(p, FORECAST_TOL))
            .map_or(0.0, |k| self.masses[k])
    }

    pub fn barycenter(&self) -> SimplexPoint {
        barycenter(self)
    }

    /// `Σ λ_i u(p_i)`.
    pub fn expect(&self, u: &dyn crate::utility::Utility) -> f64 {
        self.atoms().map(|(m, p)| m * u.value(p)).sum()
    }
}

/// `Σ λ_i p_i`.
pub fn barycenter(dist: &AtomicDistribution) -> SimplexPoint {
    SimplexPoint::mixture(dist.atoms()).expect("atoms share a dimension")
}

/// Nonnegative matrix whose rows sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RowStochasticMatrix {
    rows: Vec<Vec<f64>>,
}

impl RowStochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidDistribution("empty matrix".into()));
        }
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v < -1e-12) {
                return Err(Error::InvalidDistribution(format!("invalid row {row:?}")));
            }
            let row: Vec<f64> = row.into_iter().map(|v| v.max(0.0)).collect();
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidDistribution(format!("row sums to {s}")));
            }
            out.push(row.into_iter().map(|v| v / s).collect());
        }
        Ok(RowStochasticMatrix { rows: out })
    }

    /// Normalizes solver output, tolerating rounding-level negatives.
    pub(crate) fn from_solver(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| {
                let r: Vec<f64> = r.into_iter().map(|v| v.max(0.0)).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect();
        RowStochasticMatrix::new(rows)
    }

    pub fn identity(n: usize) -> Self {
        RowStochasticMatrix {
            rows: (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Largest entry-wise difference.
    pub fn max_abs_diff(&self, other: &[Vec<f64>]) -> f64 {
        self.rows
            .iter()
            .zip(other)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for RowStochasticMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        RowStochasticMatrix::new(rows)
    }
}

impl From<RowStochasticMatrix> for Vec<Vec<f64>> {
    fn from(m: RowStochasticMatrix) -> Self {
        m.rows
    }
}

/// For each prior conditional, a distribution over a finite forecast set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalingPolicy {
    conditionals: Vec<SimplexPoint>,
    forecasts: Vec<SimplexPoint>,
    probabilities: RowStochasticMatrix,
}

/// Policy lookups match conditionals component-wise within this tolerance.
pub const POLICY_TOL: f64 = 1e-9;

impl SignalingPolicy {
    pub fn new(
        conditionals: Vec<SimplexPoint>,
        forecasts: Vec<SimplexPoint>,
        probabilities: RowStochasticMatrix,
    ) -> Result<Self> {
        if probabilities.n_rows() != conditionals.len() {
            return Err(Error::DimensionMismatch {
                expected: conditionals.len(),
                got: probabilities.n_rows(),
            });
        }
        if probabilities.n_cols() != forecasts.len() {
            return Err(Error::DimensionMismatch {
                expected: forecasts.len(),
                got: probabilities.n_cols(),
            });
        }
        Ok(SignalingPolicy {
            conditionals,
            forecasts,
            probabilities,
        })
    }

    /// Announces every conditional as is.
    pub fn honest(conditionals: Vec<SimplexPoint>) -> Self {
        let n = conditionals.len();
        SignalingPolicy {
            forecasts: conditionals.clone(),
            conditionals,
            probabilities: RowStochasticMatrix::identity(n),
        }
    }

    pub fn conditionals(&self) -> &[SimplexPoint] {
        &self.conditionals
    }

    pub fn forecasts(&self) -> &[SimplexPoint] {
        &self.forecasts
    }

    pub fn probabilities(&self) -> &RowStochasticMatrix {
        &self.probabilities
    }

    pub fn index_of(&self, p: &SimplexPoint) -> Option<usize> {
        self.conditionals
            .iter()
            .position(|c| c.approx_eq(p, POLICY_TOL))
    }

    /// `π(f | p)`.
    pub fn probability(&self, f: &SimplexPoint, p: &SimplexPoint) -> f64 {
        let (Some(i), Some(j)) = (
            self.index_of(p),
            self.forecasts
                .iter()
                .position(|g| g.approx_eq(f, FORECAST_TOL)),
        ) else {
            return 0.0;
        };
        self.probabilities.get(i, j)
    }

    /// Samples the index of a forecast for conditional `p`.
    pub fn sample<R: Rng + ?Sized>(&self, p: &SimplexPoint, rng: &mut R) -> Result<usize> {
        let i = self
            .index_of(p)
            .ok_or_else(|| Error::UnknownConditional(p.weights().to_vec()))?;
        Ok(sample_index(self.probabilities.row(i), rng))
    }

    /// Forecast distribution `Σ_p P(p) π(·|p)` induced under prior `prior`.
    pub fn forecast_marginal(&self, prior: &AtomicDistribution) -> Result<AtomicDistribution> {
        let mut mass = vec![0.0; self.forecasts.len()];
        for (m, p) in prior.atoms() {
            let i = self
                .index_of(p)
                .ok_or_else(|| Error::UnknownConditional(p.weights().to_vec()))?;
            for (j, v) in self.probabilities.row(i).iter().enumerate() {
                mass[j] += m * v;
            }
        }
        AtomicDistribution::new(mass, self.forecasts.clone())
    }
}

/// Conditional signal law `E(s | ω)`, one row per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Experiment {
    table: RowStochasticMatrix,
}

impl Experiment {
    pub fn new(table: RowStochasticMatrix) -> Self {
        Experiment { table }
    }

    pub fn table(&self) -> &RowStochasticMatrix {
        &self.table
    }

    pub fn n_states(&self) -> usize {
        self.table.n_rows()
    }

    pub fn n_signals(&self) -> usize {
        self.table.n_cols()
    }
}

/// Rank test on `{p_i - p_1}` with tolerance `1e-9`.
pub fn affinely_independent(points: &[SimplexPoint]) -> bool {
    match points {
        [] => false,
        [_] => true,
        [first, rest @ ..] => {
            let dim = first.dim();
            if rest.len() > dim - 1 {
                return false;
            }
            let m =
                nalgebra::DMatrix::from_fn(rest.len(), dim, |i, j| rest[i].get(j) - first.get(j));
            m.rank(1e-9) == rest.len()
        }
    }
}

/// LP membership test `q ∈ conv(points)`.
pub fn in_convex_hull(q: &SimplexPoint, points: &[SimplexPoint]) -> bool {
    if points.is_empty() {
        return false;
    }
    let n = points.len();
    let mut lp = LinearProgram::new(n, Sense::Minimize);
    lp.add_constraint(vec![1.0; n], Relation::Eq, 1.0);
    for w in 1..q.dim() {
        lp.add_constraint(
            points.iter().map(|p| p.get(w)).collect(),
            Relation::Eq,
            q.get(w),
        );
    }
    lp.solve().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    pub(crate) fn toy_prior() -> AtomicDistribution {
        AtomicDistribution::binary(&[0.5, 0.5], &[0.2, 0.8]).unwrap()
    }

    #[test]
    fn barycenter_examples() {
        assert!((toy_prior().barycenter().scalar() - 0.5).abs() < 1e-15);
        let single = AtomicDistribution::dirac(b(0.3));
        assert_eq!(single.barycenter(), b(0.3));
        let cmu = AtomicDistribution::binary(&[0.5, 0.5], &[0.05, 0.95]).unwrap();
        assert!((cmu.barycenter().scalar() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn atomic_merges_and_validates() {
        let d = AtomicDistribution::binary(&[0.25, 0.25, 0.5], &[0.3, 0.3, 0.6]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.mass_of(&b(0.3)), 0.5);
        assert!(AtomicDistribution::binary(&[0.5, 0.6], &[0.1, 0.2]).is_err());
        assert!(AtomicDistribution::binary(&[1.5, -0.5], &[0.1, 0.2]).is_err());
        let zero = AtomicDistribution::binary(&[1.0, 0.0], &[0.1, 0.2]).unwrap();
        assert_eq!(zero.len(), 1);
    }

    #[test]
    fn affine_independence() {
        assert!(affinely_independent(&[b(0.2), b(0.8)]));
        let line = [
            SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap(),
            SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap(),
            SimplexPoint::new(vec![0.4, 0.3, 0.3]).unwrap(),
        ];
        assert!(!affinely_independent(&line));
        for n in 2..6 {
            let vertices: Vec<_> = (0..n).map(|w| SimplexPoint::dirac(n, w)).collect();
            assert!(affinely_independent(&vertices));
        }
    }

    #[test]
    fn hull_membership() {
        assert!(in_convex_hull(&b(0.5), &[b(0.2), b(0.8)]));
        assert!(!in_convex_hull(&b(0.9), &[b(0.2), b(0.8)]));
    }

    #[test]
    fn policy_sampling_and_marginal() {
        let pol = SignalingPolicy::new(
            vec![b(0.2), b(0.8)],
            vec![b(0.4), b(0.6)],
            RowStochasticMatrix::new(vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]])
                .unwrap(),
        )
        .unwrap();
        let q = pol.forecast_marginal(&toy_prior()).unwrap();
        assert!((q.mass_of(&b(0.4)) - 0.5).abs() < 1e-12);
        assert!(pol
            .sample(&b(0.5), &mut crate::random::stream(0, 0))
            .is_err());
        let mut rng = crate::random::stream(3, 1);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| pol.sample(&b(0.2), &mut rng).unwrap() == 0)
            .count();
        assert!((hits as f64 / n as f64 - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn serde_round_trip() {
        let d = toy_prior();
        let s = serde_json::to_string(&d).unwrap();
        let back: AtomicDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<AtomicDistribution>(
            r#"{"masses":[0.9,0.9],"points":[[0.5,0.5],[1.0,0.0]]}"#
        )
        .is_err());
        let g = RowStochasticMatrix::identity(2);
        let js = serde_json::to_string(&g).unwrap();
        assert_eq!(js, "[[1.0,0.0],[0.0,1.0]]");
    }
}
