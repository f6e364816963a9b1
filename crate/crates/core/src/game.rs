//! Stage game: payoff tables, best responses and indirect utilities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Receiver expectations within this (relative) margin of the maximum tie.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sender,
    Receiver,
}

/// Payoff tables indexed `[state][action]` plus the punishment cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPayoffs")]
pub struct PayoffSpec {
    actions: Vec<String>,
    sender: Vec<Vec<f64>>,
    receiver: Vec<Vec<f64>>,
    punishment: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPayoffs {
    actions: Vec<String>,
    sender: Vec<Vec<f64>>,
    receiver: Vec<Vec<f64>>,
    punishment: f64,
}

impl TryFrom<RawPayoffs> for PayoffSpec {
    type Error = Error;

    fn try_from(r: RawPayoffs) -> Result<Self> {
        PayoffSpec::new(r.actions, r.sender, r.receiver, r.punishment)
    }
}

impl PayoffSpec {
    pub fn new(
        actions: Vec<String>,
        sender: Vec<Vec<f64>>,
        receiver: Vec<Vec<f64>>,
        punishment: f64,
    ) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidPayoffs("no actions".into()));
        }
        if sender.len() < 2 || sender.len() != receiver.len() {
            return Err(Error::InvalidPayoffs(format!(
                "sender table has {} states, receiver table has {}",
                sender.len(),
                receiver.len()
            )));
        }
        for row in sender.iter().chain(&receiver) {
            if row.len() != actions.len() {
                return Err(Error::InvalidPayoffs(format!(
                    "row has {} entries for {} actions",
                    row.len(),
                    actions.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPayoffs("non-finite payoff".into()));
            }
        }
        let min_sender = sender
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(punishment < min_sender) {
            return Err(Error::InvalidPayoffs(format!(
                "punishment cost {punishment} must be below the smallest sender payoff {min_sender}"
            )));
        }
        Ok(PayoffSpec {
            actions,
            sender,
            receiver,
            punishment,
        })
    }

    /// Actions `a1..an` from tables given as `[state][action]`.
    pub fn from_tables(
        sender: Vec<Vec<f64>>,
        receiver: Vec<Vec<f64>>,
        punishment: f64,
    ) -> Result<Self> {
        let n = sender.first().map_or(0, Vec::len);
        let actions = (1..=n).map(|i| format!("a{i}")).collect();
        PayoffSpec::new(actions, sender, receiver, punishment)
    }

    pub fn n_states(&self) -> usize {
        self.sender.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn punishment(&self) -> f64 {
        self.punishment
    }

    pub fn payoff(&self, role: Role, state: usize, action: usize) -> f64 {
        match role {
            Role::Sender => self.sender[state][action],
            Role::Receiver => self.receiver[state][action],
        }
    }

    /// Table column of `action` as a per-state vector.
    pub fn column(&self, role: Role, action: usize) -> Vec<f64> {
        (0..self.n_states())
            .map(|w| self.payoff(role, w, action))
            .collect()
    }

    pub fn expected(&self, role: Role, belief: &SimplexPoint, action: usize) -> f64 {
        belief
            .weights()
            .iter()
            .enumerate()
            .map(|(w, p)| p * self.payoff(role, w, action))
            .sum()
    }

    /// Largest `|u_R(ω, a)|`.
    pub fn max_abs_receiver(&self) -> f64 {
        self.receiver
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Receiver's optimal actions under `belief`, in index order.
    pub fn receiver_optimal_set(&self, belief: &SimplexPoint) -> Vec<usize> {
        let values: Vec<f64> = (0..self.n_actions())
            .map(|a| self.expected(Role::Receiver, belief, a))
            .collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let margin = TIE_TOL * best.abs().max(1.0);
        (0..values.len())
            .filter(|&a| values[a] >= best - margin)
            .collect()
    }

    /// Receiver best response with ties broken in favor of the sender, then by
    /// lowest action index.
    pub fn best_response(&self, belief: &SimplexPoint) -> usize {
        let optimal = self.receiver_optimal_set(belief);
        let mut chosen = optimal[0];
        let mut best = self.expected(Role::Sender, belief, chosen);
        for &a in &optimal[1..] {
            let v = self.expected(Role::Sender, belief, a);
            if v > best + 1e-12 * best.abs().max(1.0) {
                best = v;
                chosen = a;
            }
        }
        chosen
    }

    pub fn indirect_utility(&self, belief: &SimplexPoint, role: Role) -> f64 {
        self.expected(role, belief, self.best_response(belief))
    }

    /// Vertices of the receiver's belief regions: simplex vertices plus every
    /// point where `|Ω|-1` independent indifference or facet constraints meet
    /// and the indifferent actions are all receiver-optimal.
    pub fn region_vertices(&self) -> Vec<SimplexPoint> {
        let n = self.n_states();
        let k = self.n_actions();
        // each hyperplane is a coefficient vector c with c·q = 0
        let mut planes: Vec<Plane> = (0..n)
            .map(|w| {
                let mut c = vec![0.0; n];
                c[w] = 1.0;
                (c, None)
            })
            .collect();
        for a in 0..k {
            for b in a + 1..k {
                let c: Vec<f64> = (0..n)
                    .map(|w| self.receiver[w][a] - self.receiver[w][b])
                    .collect();
                if c.iter().any(|v| v.abs() > 1e-15) {
                    planes.push((c, Some((a, b))));
                }
            }
        }
        let mut out: Vec<SimplexPoint> = Vec::new();
        let mut subset = Vec::with_capacity(n - 1);
        const MAX_SYSTEMS: usize = 200_000;
        let mut budget = MAX_SYSTEMS;
        self.enumerate_vertices(&planes, 0, &mut subset, &mut out, &mut budget);
        out
    }

    fn enumerate_vertices(
        &self,
        planes: &[Plane],
        start: usize,
        subset: &mut Vec<usize>,
        out: &mut Vec<SimplexPoint>,
        budget: &mut usize,
    ) {
        let n = self.n_states();
        if subset.len() == n - 1 {
            if *budget == 0 {
                return;
            }
            *budget -= 1;
            let mut m = DMatrix::<f64>::zeros(n, n);
            let mut rhs = DVector::<f64>::zeros(n);
            for (r, &i) in subset.iter().enumerate() {
                for c in 0..n {
                    m[(r, c)] = planes[i].0[c];
                }
            }
            for c in 0..n {
                m[(n - 1, c)] = 1.0;
            }
            rhs[n - 1] = 1.0;
            let Some(sol) = m.lu().solve(&rhs) else {
                return;
            };
            if sol.iter().any(|v| !v.is_finite() || *v < -1e-10) {
                return;
            }
            let Ok(q) = SimplexPoint::normalized(sol.iter().copied().collect()) else {
                return;
            };
            let optimal = self.receiver_optimal_set(&q);
            let consistent = subset.iter().all(|&i| match planes[i].1 {
                Some((a, b)) => optimal.contains(&a) && optimal.contains(&b),
                None => true,
            });
            if consistent && !out.iter().any(|p| p.approx_eq(&q, 1e-10)) {
                out.push(q);
            }
            return;
        }
        for i in start..planes.len() {
            subset.push(i);
            self.enumerate_vertices(planes, i + 1, subset, out, budget);
            subset.pop();
        }
    }
}

/// Hyperplane coefficients, tagged with the indifferent action pair if any.
type Plane = (Vec<f64>, Option<(usize, usize)>);

/// The 2×4 game used for the mean-based exploit and the honest benchmark.
///
/// States `ω1, ω2`; binary shorthand is the probability of `ω2`.
pub fn exploit_game() -> PayoffSpec {
    PayoffSpec::from_tables(
        vec![vec![2.0, 0.0, 4.0, 2.0], vec![2.0, 4.0, 0.0, 2.0]],
        vec![vec![8.0, 7.0, 3.0, 0.0], vec![0.0, 3.0, 7.0, 8.0]],
        -1.0,
    )
    .expect("static payoffs")
}

/// Three-action game whose sender indirect utility is 1 on `[0.4, 0.6]` and 0
/// elsewhere, realizing the two-point toy persuasion example as a stage game.
pub fn toy_game() -> PayoffSpec {
    PayoffSpec::new(
        vec!["low".into(), "mid".into(), "high".into()],
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]],
        vec![vec![2.0, 0.0, -3.0], vec![-3.0, 0.0, 2.0]],
        -1.0,
    )
    .expect("static payoffs")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    #[test]
    fn exploit_game_regions() {
        let g = exploit_game();
        assert_eq!(g.best_response(&b(0.20)), 0);
        assert_eq!(g.best_response(&b(0.40)), 1);
        assert_eq!(g.best_response(&b(0.60)), 2);
        assert_eq!(g.best_response(&b(0.90)), 3);
    }

    #[test]
    fn tie_goes_to_sender() {
        let g = exploit_game();
        // a1 and a2 both give the receiver 6 at 0.25; the sender gets 2 versus 1
        assert_eq!(g.receiver_optimal_set(&b(0.25)), vec![0, 1]);
        assert_eq!(g.best_response(&b(0.25)), 0);
        // a3/a4 tie at 0.75: sender 1 versus 2
        assert_eq!(g.best_response(&b(0.75)), 3);
        // a2/a3 tie at 0.5 with equal sender value: lowest index
        assert_eq!(g.best_response(&b(0.5)), 1);
    }

    #[test]
    fn indirect_utilities() {
        let g = exploit_game();
        assert!((g.indirect_utility(&b(0.2), Role::Sender) - 2.0).abs() < 1e-12);
        assert!((g.indirect_utility(&b(0.5), Role::Sender) - 2.0).abs() < 1e-12);
        for w in 0..2 {
            let d = SimplexPoint::dirac(2, w);
            let best = (0..4)
                .map(|a| g.payoff(Role::Receiver, w, a))
                .fold(f64::MIN, f64::max);
            assert_eq!(g.indirect_utility(&d, Role::Receiver), best);
        }
    }

    #[test]
    fn punishment_must_be_below_sender_payoffs() {
        let err =
            PayoffSpec::from_tables(vec![vec![0.0], vec![1.0]], vec![vec![0.0], vec![0.0]], 0.0);
        assert!(err.is_err());
        let ragged = PayoffSpec::from_tables(
            vec![vec![0.0, 1.0], vec![1.0]],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            -1.0,
        );
        assert!(ragged.is_err());
    }

    #[test]
    fn region_vertices_of_exploit_game() {
        let mut v: Vec<f64> = exploit_game()
            .region_vertices()
            .iter()
            .map(|p| p.scalar())
            .collect();
        v.sort_by(f64::total_cmp);
        let expected = [0.0, 0.25, 0.5, 0.75, 1.0];
        assert_eq!(v.len(), expected.len());
        for (a, e) in v.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn toy_game_utility_shape() {
        let g = toy_game();
        for (q, u) in [
            (0.2, 0.0),
            (0.4, 1.0),
            (0.5, 1.0),
            (0.6, 1.0),
            (0.61, 0.0),
            (0.8, 0.0),
        ] {
            assert_eq!(g.indirect_utility(&b(q), Role::Sender), u, "q={q}");
        }
    }
}
