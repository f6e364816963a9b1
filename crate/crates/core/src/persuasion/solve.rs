use serde::{Deserialize, Serialize};

use super::{affinely_independent, AtomicDistribution, RowStochasticMatrix, SignalingPolicy};
use crate::error::{Error, Result};
use crate::game::PayoffSpec;
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::simplex::{compositions, lattice_points, SimplexPoint, FORECAST_TOL};
use crate::utility::Utility;

/// Optimal contraction of a prior over a candidate forecast set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersuasionSolution {
    pub value: f64,
    pub q_star: AtomicDistribution,
    pub policy: SignalingPolicy,
}

fn steps_for(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {resolution} not in (0, 1]"
        )));
    }
    Ok((1.0 / resolution).round().max(1.0) as usize)
}

fn push_unique(out: &mut Vec<SimplexPoint>, p: SimplexPoint) {
    if !out.iter().any(|q| q.approx_eq(&p, FORECAST_TOL)) {
        out.push(p);
    }
}

/// Support of the prior, the receiver's region vertices and a uniform
/// lattice of the given spacing.
pub fn default_candidates(
    prior: &AtomicDistribution,
    payoffs: Option<&PayoffSpec>,
    resolution: f64,
) -> Result<Vec<SimplexPoint>> {
    let steps = steps_for(resolution)?;
    let mut out: Vec<SimplexPoint> = prior.points().to_vec();
    if let Some(g) = payoffs {
        if g.n_states() != prior.dim() {
            return Err(Error::DimensionMismatch {
                expected: prior.dim(),
                got: g.n_states(),
            });
        }
        for v in g.region_vertices() {
            push_unique(&mut out, v);
        }
    }
    for v in lattice_points(prior.dim(), steps) {
        push_unique(&mut out, v);
    }
    Ok(out)
}

/// Maximizes `Σ_ij x_ij u(q_j)` over transports `x` of the prior onto the
/// candidates that keep every candidate its own posterior mean.
pub fn solve_persuasion(
    prior: &AtomicDistribution,
    u: &dyn Utility,
    candidates: &[SimplexPoint],
) -> Result<PersuasionSolution> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("empty candidate set".into()));
    }
    let d = prior.dim();
    let mut cands: Vec<SimplexPoint> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if c.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.dim(),
            });
        }
        push_unique(&mut cands, c.clone());
    }
    if d == 2 {
        // only candidates inside the prior's support interval can carry mass
        let lo = prior
            .points()
            .iter()
            .map(SimplexPoint::scalar)
            .fold(f64::INFINITY, f64::min);
        let hi = prior
            .points()
            .iter()
            .map(SimplexPoint::scalar)
            .fold(f64::NEG_INFINITY, f64::max);
        cands.retain(|c| c.scalar() >= lo - 1e-12 && c.scalar() <= hi + 1e-12);
    }
    let (n, m) = (prior.len(), cands.len());
    if m == 0 {
        return Err(Error::Infeasible(
            "no candidate inside the prior's support hull".into(),
        ));
    }
    let values: Vec<f64> = cands.iter().map(|c| u.value(c)).collect();
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "utility is not finite at candidate {:?}",
            cands[j]
        )));
    }
    let var = |i: usize, j: usize| i * m + j;
    let mut lp = LinearProgram::new(n * m, Sense::Maximize);
    for i in 0..n {
        for j in 0..m {
            lp.set_cost(var(i, j), values[j]);
        }
        let terms: Vec<_> = (0..m).map(|j| (var(i, j), 1.0)).collect();
        lp.add_sparse(&terms, Relation::Eq, prior.masses()[i]);
    }
    for j in 0..m {
        for w in 1..d {
            let terms: Vec<_> = (0..n)
                .map(|i| (var(i, j), prior.points()[i].get(w) - cands[j].get(w)))
                .collect();
            lp.add_sparse(&terms, Relation::Eq, 0.0);
        }
    }
    let sol = lp.solve().map_err(|e| match e {
        LpError::Infeasible(_) => {
            Error::Infeasible("candidates cannot represent every support point of the prior".into())
        }
        other => Error::Lp(other),
    })?;
    let mu: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| sol.x[var(i, j)]).sum())
        .collect();
    let kept: Vec<usize> = (0..m).filter(|&j| mu[j] > 1e-12).collect();
    let q_star = AtomicDistribution::new(
        {
            let total: f64 = kept.iter().map(|&j| mu[j]).sum();
            kept.iter().map(|&j| mu[j] / total).collect()
        },
        kept.iter().map(|&j| cands[j].clone()).collect(),
    )?;
    let rows = (0..n)
        .map(|i| {
            kept.iter()
                .map(|&j| sol.x[var(i, j)] / prior.masses()[i])
                .collect()
        })
        .collect();
    let policy = SignalingPolicy::new(
        prior.points().to_vec(),
        kept.iter().map(|&j| cands[j].clone()).collect(),
        RowStochasticMatrix::from_solver(rows)?,
    )?;
    Ok(PersuasionSolution {
        value: sol.objective,
        q_star,
        policy,
    })
}

/// Concave envelope of `u` restricted to the prior's support hull, at the
/// prior's barycenter, over a barycentric lattice of that hull.
pub fn concavify_restricted(
    prior: &AtomicDistribution,
    u: &dyn Utility,
    resolution: f64,
) -> Result<PersuasionSolution> {
    if !affinely_independent(prior.points()) {
        return Err(Error::AffinelyDependent);
    }
    let steps = steps_for(resolution)?;
    let l = steps as f64;
    let mut cands: Vec<SimplexPoint> = prior.points().to_vec();
    for beta in compositions(prior.len(), steps) {
        let p = SimplexPoint::mixture(beta.iter().map(|&b| b as f64 / l).zip(prior.points()))?;
        push_unique(&mut cands, p);
    }
    solve_persuasion(prior, u, &cands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::exploit_game;
    use crate::utility::{Indicator, IndirectUtility};

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    fn toy() -> AtomicDistribution {
        AtomicDistribution::binary(&[0.5, 0.5], &[0.2, 0.8]).unwrap()
    }

    fn toy_utility() -> Indicator {
        Indicator::new(vec![b(0.4), b(0.6)])
    }

    #[test]
    fn toy_solution() {
        let cands = [b(0.2), b(0.4), b(0.6), b(0.8)];
        let s = solve_persuasion(&toy(), &toy_utility(), &cands).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        assert_eq!(s.q_star.len(), 2);
        assert!((s.q_star.mass_of(&b(0.4)) - 0.5).abs() < 1e-9);
        assert!((s.policy.probability(&b(0.4), &b(0.2)) - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn single_atom_prior() {
        let p = AtomicDistribution::dirac(b(0.3));
        let u = IndirectUtility::sender(exploit_game());
        let s = solve_persuasion(&p, &u, &[b(0.3), b(0.5)]).unwrap();
        assert!((s.value - u.value(&b(0.3))).abs() < 1e-12);
        assert_eq!(s.q_star, p);
    }

    #[test]
    fn exploit_game_benchmark_is_two() {
        let g = exploit_game();
        let u = IndirectUtility::sender(g.clone());
        let cands = default_candidates(&toy(), Some(&g), 0.01).unwrap();
        let s = solve_persuasion(&toy(), &u, &cands).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9, "{}", s.value);
    }

    #[test]
    fn candidates_must_cover_support() {
        // both below the prior mean
        let err = solve_persuasion(&toy(), &toy_utility(), &[b(0.3), b(0.35)]);
        assert!(matches!(err, Err(Error::Infeasible(_))));
        assert!(matches!(
            solve_persuasion(&toy(), &toy_utility(), &[b(0.9)]),
            Err(Error::Infeasible(_))
        ));
        // interior posteriors suffice without the support points
        let s = solve_persuasion(&toy(), &toy_utility(), &[b(0.4), b(0.6)]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        assert!(matches!(
            solve_persuasion(&toy(), &toy_utility(), &[]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn restricted_concavification() {
        // hull lattice 0.2 + 0.06k misses 0.4 and 0.6
        let s = concavify_restricted(&toy(), &toy_utility(), 0.1).unwrap();
        assert!(s.value.abs() < 1e-9);
        let s = concavify_restricted(&toy(), &toy_utility(), 1.0 / 6.0).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        let concave = |q: &SimplexPoint| -(q.scalar() - 0.5).powi(2);
        let s = concavify_restricted(&toy(), &concave, 0.05).unwrap();
        assert!(s.value.abs() < 1e-12);
        let convex = |q: &SimplexPoint| (q.scalar() - 0.5).powi(2);
        let s = concavify_restricted(&toy(), &convex, 0.05).unwrap();
        assert!((s.value - 0.09).abs() < 1e-12);
        let collinear = AtomicDistribution::binary(&[0.3, 0.3, 0.4], &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(
            concavify_restricted(&collinear, &convex, 0.1).unwrap_err(),
            Error::AffinelyDependent
        );
    }
}
