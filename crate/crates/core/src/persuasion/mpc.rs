use serde::{Deserialize, Serialize};

use super::{AtomicDistribution, Experiment, RowStochasticMatrix};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::simplex::SimplexPoint;

/// Outcome of an LP feasibility question with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCheck {
    pub feasible: bool,
    pub witness: Option<RowStochasticMatrix>,
}

impl FeasibilityCheck {
    fn infeasible() -> Self {
        FeasibilityCheck {
            feasible: false,
            witness: None,
        }
    }
}

fn feasibility(lp: &LinearProgram, n: usize, m: usize) -> Result<FeasibilityCheck> {
    match lp.solve() {
        Ok(sol) => {
            let rows = (0..n).map(|i| sol.x[i * m..(i + 1) * m].to_vec()).collect();
            let witness = RowStochasticMatrix::from_solver(rows)?;
            Ok(FeasibilityCheck {
                feasible: true,
                witness: Some(witness),
            })
        }
        Err(LpError::Infeasible(_)) => Ok(FeasibilityCheck::infeasible()),
        Err(e) => Err(e.into()),
    }
}

/// Is `q` a mean-preserving contraction of `p`?
///
/// Searches for a row-stochastic `G` with `λG = μ` and
/// `Σ_i λ_i G_ij p_i = μ_j q_j`.
pub fn is_mpc(p: &AtomicDistribution, q: &AtomicDistribution) -> Result<FeasibilityCheck> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let (n, m, d) = (p.len(), q.len(), p.dim());
    let var = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(n * m, Sense::Minimize);
    for i in 0..n {
        let terms: Vec<_> = (0..m).map(|j| (var(i, j), 1.0)).collect();
        lp.add_sparse(&terms, Relation::Eq, 1.0);
    }
    for j in 0..m {
        let terms: Vec<_> = (0..n).map(|i| (var(i, j), p.masses()[i])).collect();
        lp.add_sparse(&terms, Relation::Eq, q.masses()[j]);
        for w in 0..d {
            let terms: Vec<_> = (0..n)
                .map(|i| (var(i, j), p.masses()[i] * p.points()[i].get(w)))
                .collect();
            lp.add_sparse(&terms, Relation::Eq, q.masses()[j] * q.points()[j].get(w));
        }
    }
    feasibility(&lp, n, m)
}

/// Prior and experiment generating `q` as its posterior distribution:
/// `E(s_i | ω) = μ_i q_i(ω) / Σ_j μ_j q_j(ω)`.
pub fn distribution_to_experiment(q: &AtomicDistribution) -> Result<(SimplexPoint, Experiment)> {
    let prior = q.barycenter();
    let mut rows = Vec::with_capacity(q.dim());
    for w in 0..q.dim() {
        let marginal: f64 = q.atoms().map(|(m, p)| m * p.get(w)).sum();
        if marginal <= 1e-15 {
            return Err(Error::ZeroMarginal(w));
        }
        rows.push(q.atoms().map(|(m, p)| m * p.get(w) / marginal).collect());
    }
    Ok((
        prior,
        Experiment::new(RowStochasticMatrix::from_solver(rows)?),
    ))
}

/// Is `f` a garbling of `e`: some row-stochastic `G` with `EG = F`?
pub fn is_garbling(e: &Experiment, f: &Experiment) -> Result<FeasibilityCheck> {
    if e.n_states() != f.n_states() {
        return Err(Error::DimensionMismatch {
            expected: e.n_states(),
            got: f.n_states(),
        });
    }
    let (n, m) = (e.n_signals(), f.n_signals());
    let var = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(n * m, Sense::Minimize);
    for i in 0..n {
        let terms: Vec<_> = (0..m).map(|j| (var(i, j), 1.0)).collect();
        lp.add_sparse(&terms, Relation::Eq, 1.0);
    }
    for w in 0..e.n_states() {
        for j in 0..m {
            let terms: Vec<_> = (0..n).map(|i| (var(i, j), e.table().get(w, i))).collect();
            lp.add_sparse(&terms, Relation::Eq, f.table().get(w, j));
        }
    }
    feasibility(&lp, n, m)
}
