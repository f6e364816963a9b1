//! Informed and scripted senders.

use super::{not_empty, AgentRng, SenderView};
use crate::error::{Error, Result};
use crate::persuasion::SignalingPolicy;
use crate::simplex::SimplexPoint;

pub trait Sender: Send {
    fn forecast(&mut self, view: &SenderView<'_>, rng: &mut AgentRng) -> Result<SimplexPoint>;

    /// Called after the state of the period is revealed.
    fn observe(&mut self, _forecast: &SimplexPoint, _state: usize) {}

    fn name(&self) -> &'static str;
}

/// Announces the true conditional.
#[derive(Clone, Debug, Default)]
pub struct HonestSender;

impl Sender for HonestSender {
    fn forecast(&mut self, view: &SenderView<'_>, _rng: &mut AgentRng) -> Result<SimplexPoint> {
        Ok(view.conditional.clone())
    }

    fn name(&self) -> &'static str {
        "honest"
    }
}

/// Samples `f ~ π(·|p_t)` afresh each period.
#[derive(Clone, Debug)]
pub struct OptimalSender {
    policy: SignalingPolicy,
}

impl OptimalSender {
    pub fn new(policy: SignalingPolicy) -> Self {
        OptimalSender { policy }
    }

    pub fn policy(&self) -> &SignalingPolicy {
        &self.policy
    }
}

impl Sender for OptimalSender {
    fn forecast(&mut self, view: &SenderView<'_>, rng: &mut AgentRng) -> Result<SimplexPoint> {
        let j = self.policy.sample(view.conditional, rng)?;
        Ok(self.policy.forecasts()[j].clone())
    }

    fn name(&self) -> &'static str {
        "optimal"
    }
}

/// Replays a fixed forecast sequence.
#[derive(Clone, Debug)]
pub struct ScriptedSender {
    forecasts: Vec<SimplexPoint>,
}

impl ScriptedSender {
    pub fn new(forecasts: Vec<SimplexPoint>) -> Result<Self> {
        not_empty(&forecasts, "scripted forecasts")?;
        Ok(ScriptedSender { forecasts })
    }
}

impl Sender for ScriptedSender {
    fn forecast(&mut self, view: &SenderView<'_>, _rng: &mut AgentRng) -> Result<SimplexPoint> {
        self.forecasts
            .get(view.t as usize - 1)
            .cloned()
            .ok_or(Error::UnsupportedHistory(view.t as usize - 1))
    }

    fn name(&self) -> &'static str {
        "scripted"
    }
}

/// Switches between signaling policies at fixed periods.
///
/// With an honest first phase and a swapped second phase this is the
/// two-phase strategy that exploits mean-based receivers.
#[derive(Clone, Debug)]
pub struct PhasedSender {
    /// `(first period, policy)` in increasing period order.
    phases: Vec<(u64, SignalingPolicy)>,
}

impl PhasedSender {
    pub fn new(mut phases: Vec<(u64, SignalingPolicy)>) -> Result<Self> {
        not_empty(&phases, "phases")?;
        phases.sort_by_key(|(t, _)| *t);
        if phases[0].0 > 1 {
            return Err(Error::InvalidParameter(
                "first phase must start at period 1".into(),
            ));
        }
        Ok(PhasedSender { phases })
    }

    /// Honest announcements `low`/`high` for conditionals `low`/`high` until
    /// `switch_at - 1`, then the two messages swapped.
    pub fn swap(low: SimplexPoint, high: SimplexPoint, switch_at: u64) -> Result<Self> {
        use crate::persuasion::RowStochasticMatrix;
        let honest = SignalingPolicy::honest(vec![low.clone(), high.clone()]);
        let swapped = SignalingPolicy::new(
            vec![low.clone(), high.clone()],
            vec![low, high],
            RowStochasticMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?,
        )?;
        PhasedSender::new(vec![(1, honest), (switch_at, swapped)])
    }

    fn active(&self, t: u64) -> &SignalingPolicy {
        let k = self.phases.partition_point(|(start, _)| *start <= t);
        &self.phases[k.max(1) - 1].1
    }
}

impl Sender for PhasedSender {
    fn forecast(&mut self, view: &SenderView<'_>, rng: &mut AgentRng) -> Result<SimplexPoint> {
        let policy = self.active(view.t);
        let j = policy.sample(view.conditional, rng)?;
        Ok(policy.forecasts()[j].clone())
    }

    fn name(&self) -> &'static str {
        "phased"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persuasion::RowStochasticMatrix;
    use crate::random::stream;

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    #[test]
    fn honest_returns_conditional() {
        let mut rng = stream(0, 1);
        let p = b(0.8);
        assert_eq!(
            HonestSender
                .forecast(
                    &SenderView {
                        t: 1,
                        conditional: &p
                    },
                    &mut rng
                )
                .unwrap(),
            p
        );
    }

    #[test]
    fn optimal_frequencies() {
        let pol = SignalingPolicy::new(
            vec![b(0.05), b(0.95)],
            vec![b(0.15), b(0.85)],
            RowStochasticMatrix::new(vec![vec![8.0 / 9.0, 1.0 / 9.0], vec![1.0 / 9.0, 8.0 / 9.0]])
                .unwrap(),
        )
        .unwrap();
        let mut s = OptimalSender::new(pol);
        let mut rng = stream(11, 1);
        let p = b(0.05);
        let n = 20_000;
        let hits = (0..n)
            .filter(|&t| {
                s.forecast(&SenderView { t, conditional: &p }, &mut rng)
                    .unwrap()
                    == b(0.15)
            })
            .count();
        assert!((hits as f64 / n as f64 - 8.0 / 9.0).abs() < 0.01);
        assert!(s
            .forecast(
                &SenderView {
                    t: 1,
                    conditional: &b(0.5)
                },
                &mut rng
            )
            .is_err());
        let mut honest = OptimalSender::new(SignalingPolicy::honest(vec![b(0.2)]));
        assert_eq!(
            honest
                .forecast(
                    &SenderView {
                        t: 1,
                        conditional: &b(0.2)
                    },
                    &mut rng
                )
                .unwrap(),
            b(0.2)
        );
    }

    #[test]
    fn swap_switches() {
        let mut s = PhasedSender::swap(b(0.2), b(0.8), 6).unwrap();
        let mut rng = stream(0, 1);
        let lo = b(0.2);
        assert_eq!(
            s.forecast(
                &SenderView {
                    t: 5,
                    conditional: &lo
                },
                &mut rng
            )
            .unwrap(),
            b(0.2)
        );
        assert_eq!(
            s.forecast(
                &SenderView {
                    t: 6,
                    conditional: &lo
                },
                &mut rng
            )
            .unwrap(),
            b(0.8)
        );
    }

    #[test]
    fn scripted_ends() {
        let mut s = ScriptedSender::new(vec![b(1.0)]).unwrap();
        let mut rng = stream(0, 1);
        let p = b(0.5);
        assert!(s
            .forecast(
                &SenderView {
                    t: 1,
                    conditional: &p
                },
                &mut rng
            )
            .is_ok());
        assert!(s
            .forecast(
                &SenderView {
                    t: 2,
                    conditional: &p
                },
                &mut rng
            )
            .is_err());
    }
}
