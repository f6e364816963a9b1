//! State processes: i.i.d. sources, finite Markov chains and scripted replays.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persuasion::AtomicDistribution;
use crate::random::{sample_index, stream, ENVIRONMENT_STREAM};
use crate::simplex::{SimplexPoint, FORECAST_TOL};

/// Finite Markov chain with row-stochastic transitions `T(ω' | ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain")]
pub struct MarkovChain {
    transition: Vec<SimplexPoint>,
    initial: SimplexPoint,
}

#[derive(Deserialize)]
struct RawChain {
    transition: Vec<SimplexPoint>,
    initial: SimplexPoint,
}

impl TryFrom<RawChain> for MarkovChain {
    type Error = Error;

    fn try_from(raw: RawChain) -> Result<Self> {
        MarkovChain::new(raw.transition, raw.initial)
    }
}

impl MarkovChain {
    pub fn new(transition: Vec<SimplexPoint>, initial: SimplexPoint) -> Result<Self> {
        let n = transition.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "chain needs at least two states".into(),
            ));
        }
        if let Some(r) = transition.iter().find(|r| r.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.dim(),
            });
        }
        if initial.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: initial.dim(),
            });
        }
        Ok(MarkovChain {
            transition,
            initial,
        })
    }

    /// Row-major table of transition probabilities.
    pub fn from_rows(rows: Vec<Vec<f64>>, initial: SimplexPoint) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(SimplexPoint::new)
            .collect::<Result<_>>()?;
        MarkovChain::new(rows, initial)
    }

    /// Two states that persist with probability `stay`, started uniformly.
    pub fn symmetric(stay: f64) -> Result<Self> {
        MarkovChain::from_rows(
            vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
            SimplexPoint::uniform(2),
        )
    }

    pub fn n_states(&self) -> usize {
        self.transition.len()
    }

    pub fn row(&self, state: usize) -> &SimplexPoint {
        &self.transition[state]
    }

    pub fn rows(&self) -> &[SimplexPoint] {
        &self.transition
    }

    pub fn initial(&self) -> &SimplexPoint {
        &self.initial
    }

    fn reachable(&self, reverse: bool) -> Vec<bool> {
        let n = self.n_states();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let w = if reverse {
                    self.transition[v].get(u)
                } else {
                    self.transition[u].get(v)
                };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn is_irreducible(&self) -> bool {
        self.reachable(false).iter().all(|&s| s) && self.reachable(true).iter().all(|&s| s)
    }

    /// Period of an irreducible chain: gcd of `level(u) + 1 - level(v)` over
    /// edges, with BFS levels from state 0.
    pub fn period(&self) -> usize {
        let n = self.n_states();
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if self.transition[u].get(v) > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for u in 0..n {
            for v in 0..n {
                if self.transition[u].get(v) > 0.0
                    && level[u] != usize::MAX
                    && level[v] != usize::MAX
                {
                    let diff = (level[u] + 1) as i64 - level[v] as i64;
                    g = gcd(g, diff.unsigned_abs() as usize);
                }
            }
        }
        g.max(1)
    }

    fn check_ergodic(&self) -> Result<()> {
        if !self.is_irreducible() {
            return Err(Error::Reducible);
        }
        match self.period() {
            1 => Ok(()),
            d => Err(Error::Periodic(d)),
        }
    }

    /// `π` with `πT = π`, `Σπ = 1`.
    pub fn stationary_distribution(&self) -> Result<SimplexPoint> {
        self.check_ergodic()?;
        let n = self.n_states();
        // rows 0..n-1 of (Tᵀ - I) plus the normalization row
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            for j in 0..n {
                a[(i, j)] = self.transition[j].get(i) - f64::from(u8::from(i == j));
            }
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n);
        rhs[n - 1] = 1.0;
        let lu = a.clone().lu();
        let mut pi = lu.solve(&rhs).ok_or(Error::Reducible)?;
        // one step of iterative refinement
        let r = &rhs - &a * &pi;
        if let Some(delta) = lu.solve(&r) {
            pi += delta;
        }
        SimplexPoint::normalized(pi.iter().copied().collect())
    }

    /// Stationary mass on each distinct transition row.
    pub fn distribution_of_conditionals(&self) -> Result<AtomicDistribution> {
        let pi = self.stationary_distribution()?;
        AtomicDistribution::new(pi.weights().to_vec(), self.transition.clone())
    }

    /// Largest `|(πT)_j - π_j|`.
    pub fn stationarity_residual(&self, pi: &SimplexPoint) -> f64 {
        let n = self.n_states();
        (0..n)
            .map(|j| {
                ((0..n)
                    .map(|i| pi.get(i) * self.transition[i].get(j))
                    .sum::<f64>()
                    - pi.get(j))
                .abs()
            })
            .fold(0.0, f64::max)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A data-generating process for the state sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProcessModel {
    Iid {
        p: SimplexPoint,
    },
    Markov {
        chain: MarkovChain,
    },
    /// Fixed state sequence; conditionals are reported as `δ_{ω_t}`.
    Scripted {
        states: Vec<usize>,
        n_states: usize,
    },
}

impl ProcessModel {
    pub fn iid(p: SimplexPoint) -> Self {
        ProcessModel::Iid { p }
    }

    pub fn markov(chain: MarkovChain) -> Self {
        ProcessModel::Markov { chain }
    }

    pub fn scripted(states: Vec<usize>, n_states: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("scripted sequence is empty".into()));
        }
        if let Some(s) = states.iter().find(|&&s| s >= n_states) {
            return Err(Error::InvalidParameter(format!(
                "scripted state {s} out of range"
            )));
        }
        Ok(ProcessModel::Scripted { states, n_states })
    }

    pub fn n_states(&self) -> usize {
        match self {
            ProcessModel::Iid { p } => p.dim(),
            ProcessModel::Markov { chain } => chain.n_states(),
            ProcessModel::Scripted { n_states, .. } => *n_states,
        }
    }

    /// Exact law of the next state given the realized history.
    pub fn conditional_distribution(&self, history: &[usize]) -> Result<SimplexPoint> {
        match self {
            ProcessModel::Iid { p } => Ok(p.clone()),
            ProcessModel::Markov { chain } => match history.last() {
                None => Ok(chain.initial().clone()),
                Some(&s) if s < chain.n_states() => Ok(chain.row(s).clone()),
                Some(&s) => Err(Error::InvalidParameter(format!("state {s} out of range"))),
            },
            ProcessModel::Scripted { states, n_states } => states
                .get(history.len())
                .map(|&s| SimplexPoint::dirac(*n_states, s))
                .ok_or(Error::UnsupportedHistory(history.len())),
        }
    }

    /// Long-run distribution of conditionals along a play.
    pub fn distribution_of_conditionals(&self) -> Result<AtomicDistribution> {
        match self {
            ProcessModel::Iid { p } => Ok(AtomicDistribution::dirac(p.clone())),
            ProcessModel::Markov { chain } => chain.distribution_of_conditionals(),
            ProcessModel::Scripted { states, n_states } => {
                let mut counts = vec![0.0; *n_states];
                for &s in states {
                    counts[s] += 1.0;
                }
                let t = states.len() as f64;
                AtomicDistribution::new(
                    counts.iter().map(|c| c / t).collect(),
                    (0..*n_states)
                        .map(|s| SimplexPoint::dirac(*n_states, s))
                        .collect(),
                )
            }
        }
    }

    pub fn sampler(&self) -> ProcessSampler<'_> {
        ProcessSampler {
            model: self,
            last: None,
            t: 0,
        }
    }
}

/// Incremental sampler carrying only the state needed for the next draw.
#[derive(Clone, Debug)]
pub struct ProcessSampler<'a> {
    model: &'a ProcessModel,
    last: Option<usize>,
    t: usize,
}

impl ProcessSampler<'_> {
    /// Conditional law of the next state.
    pub fn conditional(&self) -> Result<&SimplexPoint> {
        match self.model {
            ProcessModel::Iid { p } => Ok(p),
            ProcessModel::Markov { chain } => Ok(match self.last {
                None => chain.initial(),
                Some(s) => chain.row(s),
            }),
            ProcessModel::Scripted { .. } => Err(Error::InvalidParameter(
                "scripted conditionals are materialized per period".into(),
            )),
        }
    }

    /// Draws the next state; returns it with its conditional law.
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(SimplexPoint, usize)> {
        let (p, s) = match self.model {
            ProcessModel::Scripted { states, n_states } => {
                let s = *states
                    .get(self.t)
                    .ok_or(Error::UnsupportedHistory(self.t))?;
                (SimplexPoint::dirac(*n_states, s), s)
            }
            _ => {
                let p = self.conditional()?.clone();
                let s = sample_index(p.weights(), rng);
                (p, s)
            }
        };
        self.last = Some(s);
        self.t += 1;
        Ok((p, s))
    }

    /// Records an externally chosen state (the engine draws states itself).
    pub fn observe(&mut self, state: usize) {
        self.last = Some(state);
        self.t += 1;
    }
}

/// Realized states and their conditional laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<usize>,
    pub conditionals: Vec<SimplexPoint>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Fraction of periods whose conditional equals each atom of `dist`.
    pub fn conditional_frequencies(&self, points: &[SimplexPoint]) -> Vec<f64> {
        let t = self.len() as f64;
        points
            .iter()
            .map(|p| {
                self.conditionals
                    .iter()
                    .filter(|c| c.approx_eq(p, FORECAST_TOL))
                    .count() as f64
                    / t
            })
            .collect()
    }

    pub fn state_frequencies(&self, n_states: usize) -> Vec<f64> {
        let mut counts = vec![0.0; n_states];
        for &s in &self.states {
            counts[s] += 1.0;
        }
        let t = self.len() as f64;
        counts.into_iter().map(|c| c / t).collect()
    }

    /// CSV with columns `t,state,p_0,…`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.conditionals.first().map_or(0, SimplexPoint::dim);
        write!(out, "t,state")?;
        for w in 0..d {
            write!(out, ",p_{w}")?;
        }
        writeln!(out)?;
        for (t, (s, p)) in self.states.iter().zip(&self.conditionals).enumerate() {
            write!(out, "{},{}", t + 1, s)?;
            for v in p.weights() {
                write!(out, ",{v:.12}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Samples `horizon` periods on the environment stream of `seed`.
pub fn sample_trace(model: &ProcessModel, horizon: usize, seed: u64) -> Result<Trace> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut rng = stream(seed, ENVIRONMENT_STREAM);
    let mut sampler = model.sampler();
    let mut states = Vec::with_capacity(horizon);
    let mut conditionals = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (p, s) = sampler.next(&mut rng).map_err(|e| e.at(t + 1))?;
        states.push(s);
        conditionals.push(p);
    }
    Ok(Trace {
        states,
        conditionals,
    })
}
