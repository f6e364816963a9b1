//! Nature: state processes and the adaptive block adversary.

use super::not_empty;
use crate::calibration::CalibrationLedger;
use crate::error::{Error, Result};
use crate::processes::ProcessModel;
use crate::simplex::{SimplexPoint, FORECAST_TOL};

pub trait Nature: Send {
    fn n_states(&self) -> usize;

    /// Law of period `t`'s state (1-based), drawn by the engine.
    fn law(&mut self, t: u64) -> Result<SimplexPoint>;

    fn observe(&mut self, forecast: &SimplexPoint, state: usize);

    fn name(&self) -> &'static str;
}

/// A non-adaptive process.
#[derive(Clone, Debug)]
pub struct ProcessNature {
    model: ProcessModel,
    last: Option<usize>,
}

impl ProcessNature {
    pub fn new(model: ProcessModel) -> Self {
        ProcessNature { model, last: None }
    }

    /// Starts a Markov chain as if `state` had been realized in period 0, so
    /// that every conditional is a transition row.
    pub fn with_prehistory(mut self, state: usize) -> Self {
        self.last = Some(state);
        self
    }
}

impl Nature for ProcessNature {
    fn n_states(&self) -> usize {
        self.model.n_states()
    }

    fn law(&mut self, t: u64) -> Result<SimplexPoint> {
        match &self.model {
            ProcessModel::Iid { p } => Ok(p.clone()),
            ProcessModel::Markov { chain } => Ok(match self.last {
                None => chain.initial().clone(),
                Some(s) => chain.row(s).clone(),
            }),
            ProcessModel::Scripted { states, n_states } => states
                .get(t as usize - 1)
                .map(|&s| SimplexPoint::dirac(*n_states, s))
                .ok_or(Error::UnsupportedHistory(t as usize - 1)),
        }
    }

    fn observe(&mut self, _forecast: &SimplexPoint, state: usize) {
        self.last = Some(state);
    }

    fn name(&self) -> &'static str {
        "process"
    }
}

/// i.i.d. blocks of lengths `α_l T` with laws `p_l`.
///
/// At the end of each block nature checks the sender's calibration on that
/// block alone. On a failure beyond `ε` it switches for the rest of the game
/// to a degenerate law `δ_ω` not among the blocks played so far, the one
/// farthest from the sender's most used forecast in the failed block.
#[derive(Clone, Debug)]
pub struct BlockAdversary {
    points: Vec<SimplexPoint>,
    /// Last period of each block.
    ends: Vec<u64>,
    eps: f64,
    punish: bool,
    block: usize,
    block_ledger: CalibrationLedger,
    punishment: Option<SimplexPoint>,
    t: u64,
}

impl BlockAdversary {
    pub fn new(weights: &[f64], points: Vec<SimplexPoint>, eps: f64, horizon: u64) -> Result<Self> {
        not_empty(&points, "block laws")?;
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "block weights {weights:?} must be a distribution"
            )));
        }
        let d = points[0].dim();
        if points.len() > d + 2 {
            return Err(Error::InvalidParameter(format!(
                "at most {} blocks for {d} states",
                d + 2
            )));
        }
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: 0,
            });
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let mut acc = 0.0;
        let mut ends: Vec<u64> = weights
            .iter()
            .map(|w| {
                acc += w;
                (acc * horizon as f64).round() as u64
            })
            .collect();
        *ends.last_mut().expect("non-empty") = horizon;
        Ok(BlockAdversary {
            points,
            ends,
            eps,
            punish: true,
            block: 0,
            block_ledger: CalibrationLedger::new(),
            punishment: None,
            t: 0,
        })
    }

    /// Same block schedule without the punishment switch.
    pub fn without_punishment(mut self) -> Self {
        self.punish = false;
        self
    }

    pub fn punishment(&self) -> Option<&SimplexPoint> {
        self.punishment.as_ref()
    }

    pub fn block_ends(&self) -> &[u64] {
        &self.ends
    }

    fn choose_punishment(&self) -> Option<SimplexPoint> {
        let used = &self.points[..=self.block];
        let most_used = self
            .block_ledger
            .entries()
            .iter()
            .max_by(|a, b| a.count.cmp(&b.count).then(std::cmp::Ordering::Greater))?;
        let d = self.points[0].dim();
        let mut best: Option<(f64, SimplexPoint)> = None;
        for w in 0..d {
            let delta = SimplexPoint::dirac(d, w);
            if used.iter().any(|p| p.approx_eq(&delta, FORECAST_TOL)) {
                continue;
            }
            let dist = delta.distance(&most_used.forecast);
            if best.as_ref().is_none_or(|(bd, _)| dist > *bd + 1e-12) {
                best = Some((dist, delta));
            }
        }
        best.map(|(_, p)| p)
    }
}

impl Nature for BlockAdversary {
    fn n_states(&self) -> usize {
        self.points[0].dim()
    }

    fn law(&mut self, _t: u64) -> Result<SimplexPoint> {
        Ok(match &self.punishment {
            Some(p) => p.clone(),
            None => self.points[self.block].clone(),
        })
    }

    fn observe(&mut self, forecast: &SimplexPoint, state: usize) {
        self.t += 1;
        if self.punishment.is_some() {
            return;
        }
        self.block_ledger.update(forecast, state);
        if self.block < self.ends.len() && self.t >= self.ends[self.block] {
            if self.punish && self.block_ledger.score() > self.eps {
                self.punishment = self.choose_punishment();
            }
            self.block_ledger = CalibrationLedger::new();
            if self.block + 1 < self.ends.len() {
                self.block += 1;
            }
        }
    }

    fn name(&self) -> &'static str {
        "block-adversary"
    }
}
