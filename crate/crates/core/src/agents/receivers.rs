//! Receiver heuristics.

use rand::Rng;

use super::{AgentRng, ReceiverView};
use crate::calibration::{CalibrationLedger, ErrorSchedule};
use crate::error::{Error, Result};
use crate::game::{PayoffSpec, Role};
use crate::random::sample_index;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    Act(usize),
    /// The outside option: sender gets the punishment cost, receiver gets 0.
    Default,
}

pub trait Receiver: Send {
    fn respond(&mut self, view: &ReceiverView<'_>, rng: &mut AgentRng) -> Result<Response>;

    fn observe(&mut self, view: &ReceiverView<'_>, response: Response, state: usize);

    fn name(&self) -> &'static str;
}

#[derive(Clone, Debug, Default)]
struct BestResponseCache(Vec<Option<usize>>);

impl BestResponseCache {
    fn get(&mut self, payoffs: &PayoffSpec, view: &ReceiverView<'_>) -> usize {
        if self.0.len() <= view.context {
            self.0.resize(view.context + 1, None);
        }
        *self.0[view.context].get_or_insert_with(|| payoffs.best_response(view.forecast))
    }
}

/// Best-responds to the forecast while the forecasts of periods `1..t-1`
/// pass the calibration test, and takes the default action otherwise.
#[derive(Clone, Debug)]
pub struct CalibrationReceiver {
    payoffs: PayoffSpec,
    schedule: ErrorSchedule,
    ledger: CalibrationLedger,
    deviations: Vec<f64>,
    deviation_sum: f64,
    cache: BestResponseCache,
}

impl CalibrationReceiver {
    pub fn new(payoffs: PayoffSpec, schedule: ErrorSchedule) -> Self {
        CalibrationReceiver {
            payoffs,
            schedule,
            ledger: CalibrationLedger::new(),
            deviations: Vec::new(),
            deviation_sum: 0.0,
            cache: BestResponseCache::default(),
        }
    }

    pub fn ledger(&self) -> &CalibrationLedger {
        &self.ledger
    }

    /// Score of the ledger so far.
    pub fn score(&self) -> f64 {
        match self.ledger.total() {
            0 => 0.0,
            t => self.deviation_sum / t as f64,
        }
    }

    pub fn passes(&self) -> bool {
        let t = self.ledger.total();
        t == 0 || self.score() <= self.schedule.epsilon(t)
    }
}

impl Receiver for CalibrationReceiver {
    fn respond(&mut self, view: &ReceiverView<'_>, _rng: &mut AgentRng) -> Result<Response> {
        Ok(if self.passes() {
            Response::Act(self.cache.get(&self.payoffs, view))
        } else {
            Response::Default
        })
    }

    fn observe(&mut self, view: &ReceiverView<'_>, _response: Response, state: usize) {
        let i = self.ledger.update(view.forecast, state);
        if i == self.deviations.len() {
            self.deviations.push(0.0);
        }
        let e = &self.ledger.entries()[i];
        let c = e.count as f64;
        let dev = e
            .tally
            .iter()
            .zip(e.forecast.weights())
            .map(|(n, f)| (n - c * f) * (n - c * f))
            .sum::<f64>()
            .sqrt();
        self.deviation_sum += dev - self.deviations[i];
        self.deviations[i] = dev;
        if self.ledger.total().is_multiple_of(4096) {
            self.deviation_sum = self.deviations.iter().sum();
        }
    }

    fn name(&self) -> &'static str {
        "calibration"
    }
}

/// Always best-responds to the announced forecast.
#[derive(Clone, Debug)]
pub struct FaceValueReceiver {
    payoffs: PayoffSpec,
    cache: BestResponseCache,
}

impl FaceValueReceiver {
    pub fn new(payoffs: PayoffSpec) -> Self {
        FaceValueReceiver {
            payoffs,
            cache: BestResponseCache::default(),
        }
    }
}

impl Receiver for FaceValueReceiver {
    fn respond(&mut self, view: &ReceiverView<'_>, _rng: &mut AgentRng) -> Result<Response> {
        Ok(Response::Act(self.cache.get(&self.payoffs, view)))
    }

    fn observe(&mut self, _view: &ReceiverView<'_>, _response: Response, _state: usize) {}

    fn name(&self) -> &'static str {
        "face-value"
    }
}

/// Per-context cumulative payoffs `σ_a = Σ u_R(ω_s, a)` over the periods in
/// which the context's forecast was announced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextualLearnerState {
    pub cumulative: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
}

impl ContextualLearnerState {
    fn ensure(&mut self, context: usize, n_actions: usize) {
        if self.cumulative.len() <= context {
            self.cumulative.resize(context + 1, vec![0.0; n_actions]);
            self.counts.resize(context + 1, 0);
        }
    }

    fn record(&mut self, payoffs: &PayoffSpec, context: usize, state: usize) {
        self.ensure(context, payoffs.n_actions());
        for (a, s) in self.cumulative[context].iter_mut().enumerate() {
            *s += payoffs.payoff(Role::Receiver, state, a);
        }
        self.counts[context] += 1;
    }

    /// Highest cumulative payoff in `context`, lowest index on ties.
    pub fn leader(&self, context: usize) -> usize {
        let Some(s) = self.cumulative.get(context) else {
            return 0;
        };
        let mut best = 0;
        for a in 1..s.len() {
            if s[a] > s[best] {
                best = a;
            }
        }
        best
    }
}

/// Follow-the-leader per context, exploring uniformly with probability `γ`.
#[derive(Clone, Debug)]
pub struct MeanBasedReceiver {
    payoffs: PayoffSpec,
    gamma: f64,
    state: ContextualLearnerState,
}

impl MeanBasedReceiver {
    pub fn new(payoffs: PayoffSpec, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "exploration rate {gamma} not in [0, 1]"
            )));
        }
        Ok(MeanBasedReceiver {
            payoffs,
            gamma,
            state: ContextualLearnerState::default(),
        })
    }

    pub fn state(&self) -> &ContextualLearnerState {
        &self.state
    }
}

impl Receiver for MeanBasedReceiver {
    fn respond(&mut self, view: &ReceiverView<'_>, rng: &mut AgentRng) -> Result<Response> {
        if self.gamma > 0.0 && rng.random::<f64>() < self.gamma {
            return Ok(Response::Act(rng.random_range(0..self.payoffs.n_actions())));
        }
        Ok(Response::Act(self.state.leader(view.context)))
    }

    fn observe(&mut self, view: &ReceiverView<'_>, _response: Response, state: usize) {
        self.state.record(&self.payoffs, view.context, state);
    }

    fn name(&self) -> &'static str {
        "mean-based"
    }
}

/// Multiplicative weights per context, `w_a ∝ exp(η σ_a)` with
/// `η = scale · √(8 ln|A| / max(t_f, 1))`.
#[derive(Clone, Debug)]
pub struct NoRegretReceiver {
    payoffs: PayoffSpec,
    scale: f64,
    state: ContextualLearnerState,
    weights: Vec<f64>,
}

impl NoRegretReceiver {
    /// `scale = None` uses the reciprocal of the receiver payoff range.
    pub fn new(payoffs: PayoffSpec, scale: Option<f64>) -> Result<Self> {
        let scale = match scale {
            Some(s) if s > 0.0 && s.is_finite() => s,
            Some(s) => {
                return Err(Error::InvalidParameter(format!(
                    "learning-rate scale {s} must be positive"
                )))
            }
            None => {
                let vals = (0..payoffs.n_states())
                    .flat_map(|w| (0..payoffs.n_actions()).map(move |a| (w, a)))
                    .map(|(w, a)| payoffs.payoff(Role::Receiver, w, a));
                let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                    (l.min(v), h.max(v))
                });
                if hi > lo {
                    1.0 / (hi - lo)
                } else {
                    1.0
                }
            }
        };
        let n = payoffs.n_actions();
        Ok(NoRegretReceiver {
            payoffs,
            scale,
            state: ContextualLearnerState::default(),
            weights: vec![0.0; n],
        })
    }

    /// Current mixed action in `context`.
    pub fn mixed_action(&mut self, context: usize) -> &[f64] {
        let n = self.payoffs.n_actions();
        self.state.ensure(context, n);
        let t = self.state.counts[context].max(1) as f64;
        let eta = self.scale * (8.0 * (n as f64).ln() / t).sqrt();
        let s = &self.state.cumulative[context];
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (w, v) in self.weights.iter_mut().zip(s) {
            *w = (eta * (v - top)).exp();
            total += *w;
        }
        for w in &mut self.weights {
            *w /= total;
        }
        &self.weights
    }
}

impl Receiver for NoRegretReceiver {
    fn respond(&mut self, view: &ReceiverView<'_>, rng: &mut AgentRng) -> Result<Response> {
        self.mixed_action(view.context);
        Ok(Response::Act(sample_index(&self.weights, rng)))
    }

    fn observe(&mut self, view: &ReceiverView<'_>, _response: Response, state: usize) {
        self.state.record(&self.payoffs, view.context, state);
    }

    fn name(&self) -> &'static str {
        "no-regret"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::exploit_game;
    use crate::random::stream;
    use crate::simplex::SimplexPoint;

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    #[test]
    fn calibration_receiver_defaults_after_failure() {
        let states = [1, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let f3 = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut r =
            CalibrationReceiver::new(exploit_game(), ErrorSchedule::constant(0.05).unwrap());
        let mut rng = stream(0, 2);
        let fs: Vec<SimplexPoint> = f3.iter().map(|&q| b(q)).collect();
        let ctx = |f: &SimplexPoint| usize::from(f.scalar() < 0.5);
        let first = ReceiverView {
            t: 1,
            forecast: &fs[0],
            context: 0,
        };
        assert_eq!(r.respond(&first, &mut rng).unwrap(), Response::Act(3));
        for (t, (f, s)) in fs.iter().zip(states).enumerate() {
            let v = ReceiverView {
                t: t as u64 + 1,
                forecast: f,
                context: ctx(f),
            };
            let resp = r.respond(&v, &mut rng).unwrap();
            r.observe(&v, resp, s);
        }
        let v = ReceiverView {
            t: 11,
            forecast: &fs[0],
            context: 0,
        };
        assert_eq!(r.respond(&v, &mut rng).unwrap(), Response::Default);
        assert!((r.score() - 0.2828427).abs() < 1e-6);
    }

    #[test]
    fn mean_based_follows_leader() {
        let mut r = MeanBasedReceiver::new(exploit_game(), 0.0).unwrap();
        let mut rng = stream(0, 2);
        let f = b(0.2);
        let v = ReceiverView {
            t: 1,
            forecast: &f,
            context: 0,
        };
        assert_eq!(r.respond(&v, &mut rng).unwrap(), Response::Act(0));
        for _ in 0..3 {
            r.observe(&v, Response::Act(0), 1);
        }
        // three ω₂ draws: a4 has 24, the most
        assert_eq!(r.respond(&v, &mut rng).unwrap(), Response::Act(3));
        assert!(MeanBasedReceiver::new(exploit_game(), 1.5).is_err());
    }

    #[test]
    fn mean_based_crossing() {
        // context l sees ω̄ = 0.2 for 100 periods, then ω₂ only; a2 overtakes a1 once ω̄ > 0.25
        let g = exploit_game();
        let mut r = MeanBasedReceiver::new(g, 0.0).unwrap();
        let mut rng = stream(0, 2);
        let f = b(0.2);
        let v = ReceiverView {
            t: 1,
            forecast: &f,
            context: 0,
        };
        for k in 0..100 {
            r.observe(&v, Response::Act(0), usize::from(k % 5 == 0));
        }
        let mut switched = None;
        for k in 1..=20 {
            r.observe(&v, Response::Act(0), 1);
            if switched.is_none() && r.respond(&v, &mut rng).unwrap() == Response::Act(1) {
                switched = Some(k);
            }
        }
        // (20 + k)/(100 + k) > 0.25 first at k = 7 (k = 20/3 is the exact crossing)
        assert_eq!(switched, Some(7));
    }

    #[test]
    fn no_regret_mixtures() {
        let flat = PayoffSpec::from_tables(
            vec![vec![0.0; 3], vec![0.0; 3]],
            vec![vec![1.0; 3], vec![1.0; 3]],
            -1.0,
        )
        .unwrap();
        let mut r = NoRegretReceiver::new(flat, None).unwrap();
        assert!(r
            .mixed_action(0)
            .iter()
            .all(|w| (w - 1.0 / 3.0).abs() < 1e-12));
        let mut r = NoRegretReceiver::new(exploit_game(), None).unwrap();
        let f = b(0.2);
        let v = ReceiverView {
            t: 1,
            forecast: &f,
            context: 0,
        };
        r.observe(&v, Response::Act(0), 0);
        let w = r.mixed_action(0).to_vec();
        // payoffs 8, 7, 3, 0 in state 0
        assert!(w.windows(2).all(|p| p[0] > p[1]) && w[3] > 0.0, "{w:?}");
        for _ in 0..2000 {
            r.observe(&v, Response::Act(0), 0);
        }
        assert!(r.mixed_action(0)[0] > 0.99);
    }
}
