//! Uninformed senders: a Blackwell approachability strategy over a forecast
//! grid and a block-wise opportunistic strategy with an approachability
//! fallback.

use super::grid::ForecastGrid;
use super::senders::Sender;
use super::{AgentRng, SenderView};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::persuasion::LowerEnvelope;
use crate::random::sample_index;
use crate::simplex::{SimplexPoint, FORECAST_TOL};
use crate::utility::SharedUtility;

/// Running averages of the vector payoff `(r, c_f for each f, δ_ω)`.
///
/// Kept as sums; `c̄_f = (N_f f - tally_f) / T`.
#[derive(Clone, Debug)]
pub struct ApproachabilityState {
    t: u64,
    reward: f64,
    counts: Vec<u64>,
    tallies: Vec<Vec<f64>>,
    states: Vec<f64>,
}

impl ApproachabilityState {
    pub fn new(n_forecasts: usize, n_states: usize) -> Self {
        ApproachabilityState {
            t: 0,
            reward: 0.0,
            counts: vec![0; n_forecasts],
            tallies: vec![vec![0.0; n_states]; n_forecasts],
            states: vec![0.0; n_states],
        }
    }

    pub fn record(&mut self, forecast: usize, reward: f64, state: usize) {
        self.t += 1;
        self.reward += reward;
        self.counts[forecast] += 1;
        self.tallies[forecast][state] += 1.0;
        self.states[state] += 1.0;
    }

    pub fn periods(&self) -> u64 {
        self.t
    }

    pub fn average_reward(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        self.reward / self.t as f64
    }

    pub fn state_frequencies(&self) -> Option<SimplexPoint> {
        if self.t == 0 {
            return None;
        }
        SimplexPoint::normalized(self.states.clone()).ok()
    }

    /// `c̄_f` against the grid vertices.
    pub fn deviation(&self, grid: &ForecastGrid, f: usize) -> Vec<f64> {
        let n = self.t.max(1) as f64;
        let c = self.counts[f] as f64;
        grid.vertex(f)
            .weights()
            .iter()
            .zip(&self.tallies[f])
            .map(|(v, k)| (c * v - k) / n)
            .collect()
    }

    /// Calibration score of the forecasts recorded so far.
    pub fn score(&self, grid: &ForecastGrid) -> f64 {
        (0..self.counts.len())
            .filter(|&f| self.counts[f] > 0)
            .map(|f| {
                self.deviation(grid, f)
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
            })
            .sum()
    }
}

/// Threshold `τ` with `Σ max(n_f - τ, 0) = radius`; zero if already inside.
fn group_threshold(norms: &[f64], radius: f64) -> f64 {
    let total: f64 = norms.iter().sum();
    if total <= radius {
        return 0.0;
    }
    let mut sorted: Vec<f64> = norms.iter().copied().filter(|n| *n > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, n) in sorted.iter().enumerate() {
        acc += n;
        let cand = (acc - radius) / (k + 1) as f64;
        if cand < *n {
            tau = cand;
        } else {
            break;
        }
    }
    tau.max(0.0)
}

/// Approaches `{r ≥ h(x)} × {Σ_f ‖c_f‖ ≤ ε}`, `h` the lower convex envelope of
/// the sender's utility over the grid.
pub struct ApproachableSender {
    grid: ForecastGrid,
    utility: SharedUtility,
    rewards: Vec<f64>,
    envelope: LowerEnvelope,
    state: ApproachabilityState,
    last: Option<usize>,
}

impl std::fmt::Debug for ApproachableSender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApproachableSender")
            .field("grid", &self.grid)
            .field("periods", &self.state.t)
            .finish_non_exhaustive()
    }
}

impl ApproachableSender {
    pub fn new(grid: ForecastGrid, utility: SharedUtility) -> Self {
        let rewards: Vec<f64> = grid.vertices().iter().map(|v| utility.value(v)).collect();
        let envelope = LowerEnvelope::for_grid(&grid, utility.as_ref());
        let state = ApproachabilityState::new(grid.len(), grid.dim());
        ApproachableSender {
            grid,
            utility,
            rewards,
            envelope,
            state,
            last: None,
        }
    }

    pub fn grid(&self) -> &ForecastGrid {
        &self.grid
    }

    pub fn state(&self) -> &ApproachabilityState {
        &self.state
    }

    pub fn envelope(&self) -> &LowerEnvelope {
        &self.envelope
    }

    pub fn utility(&self) -> &SharedUtility {
        &self.utility
    }

    /// Records a period in which grid vertex `forecast` was announced.
    pub fn record(&mut self, forecast: usize, state: usize) {
        self.state.record(forecast, self.rewards[forecast], state);
    }

    /// Mixed forecast for the next period; a point mass when the average
    /// payoff is already in the target set.
    pub fn mixed(&self) -> Result<Vec<f64>> {
        let n = self.grid.len();
        let d = self.grid.dim();
        let Some(omega) = self.state.state_frequencies() else {
            return Ok(point_mass(n, self.grid.nearest(&SimplexPoint::uniform(d))));
        };

        let deviations: Vec<Vec<f64>> = (0..n)
            .map(|f| self.state.deviation(&self.grid, f))
            .collect();
        let norms: Vec<f64> = deviations
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let eps = self.grid.eps();
        let tau = group_threshold(&norms, eps);
        let calibrated = norms.iter().sum::<f64>() <= eps + FORECAST_TOL;

        let support = self.envelope.support(&omega)?;
        let gap = support.value - self.state.average_reward();
        let rewarded = gap <= FORECAST_TOL;

        if calibrated && rewarded {
            return Ok(point_mass(n, self.grid.nearest(&omega)));
        }

        // Direction from the average to its projection, negated.
        let (lam_r, lam_x) = if rewarded {
            (0.0, vec![0.0; d])
        } else {
            let mean = support.normal.iter().sum::<f64>() / d as f64;
            let y: Vec<f64> = support.normal.iter().map(|v| v - mean).collect();
            let coef = gap / (1.0 + y.iter().map(|v| v * v).sum::<f64>());
            (-coef, y.iter().map(|v| coef * v).collect())
        };
        let lam_c: Vec<Vec<f64>> = deviations
            .iter()
            .zip(&norms)
            .map(|(c, &nf)| {
                let s = if calibrated || nf == 0.0 {
                    0.0
                } else {
                    (tau / nf).min(1.0)
                };
                c.iter().map(|x| x * s).collect()
            })
            .collect();

        // M[f][w] = λ·m(f, w)
        let mut m = vec![vec![0.0; d]; n];
        for f in 0..n {
            let v = self.grid.vertex(f).weights();
            let cf = &lam_c[f];
            let base = lam_r * self.rewards[f] + cf.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            for w in 0..d {
                m[f][w] = base - cf[w] + lam_x[w];
            }
        }
        let lo = m.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let shift = 1.0 - lo;

        let mut lp = LinearProgram::new(n + 1, Sense::Minimize);
        lp.set_cost(n, 1.0);
        for w in 0..d {
            let mut row: Vec<(usize, f64)> = (0..n).map(|f| (f, m[f][w] + shift)).collect();
            row.push((n, -1.0));
            lp.add_sparse(&row, Relation::Le, 0.0);
        }
        let ones: Vec<(usize, f64)> = (0..n).map(|f| (f, 1.0)).collect();
        lp.add_sparse(&ones, Relation::Eq, 1.0);
        let sol = lp.solve()?;
        Ok(sol.x[..n].iter().map(|x| x.max(0.0)).collect())
    }

    fn draw(&mut self, rng: &mut AgentRng) -> Result<usize> {
        let mu = self.mixed()?;
        if !mu.iter().any(|x| *x > 0.0) {
            return Err(Error::Infeasible("approachability mixture is empty".into()));
        }
        Ok(sample_index(&mu, rng))
    }
}

fn point_mass(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

impl Sender for ApproachableSender {
    fn forecast(&mut self, _view: &SenderView<'_>, rng: &mut AgentRng) -> Result<SimplexPoint> {
        let i = self.draw(rng)?;
        self.last = Some(i);
        Ok(self.grid.vertex(i).clone())
    }

    fn observe(&mut self, forecast: &SimplexPoint, state: usize) {
        let i = match self.last.take() {
            Some(i) => i,
            None => self.grid.nearest(forecast),
        };
        self.record(i, state);
    }

    fn name(&self) -> &'static str {
        "approachable"
    }
}

/// Announces `f*` of the previous block's empirical state distribution,
/// falling back for good to [`ApproachableSender`] once two consecutive
/// blocks drift apart by more than the threshold in total variation.
#[derive(Debug)]
pub struct OpportunisticSender {
    block_length: u64,
    threshold: f64,
    fallback: ApproachableSender,
    block_states: Vec<u64>,
    previous: Option<Vec<f64>>,
    target: usize,
    fallen_back_at: Option<u64>,
    t: u64,
    last: Option<usize>,
}

impl OpportunisticSender {
    /// Drift threshold `2ε`.
    pub fn new(block_length: u64, grid: ForecastGrid, utility: SharedUtility) -> Result<Self> {
        let threshold = 2.0 * grid.eps();
        Self::with_threshold(block_length, grid, utility, threshold)
    }

    pub fn with_threshold(
        block_length: u64,
        grid: ForecastGrid,
        utility: SharedUtility,
        threshold: f64,
    ) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::InvalidParameter(
                "block length must be at least 1".into(),
            ));
        }
        if !(threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drift threshold {threshold}"
            )));
        }
        let d = grid.dim();
        let target = grid.nearest(&SimplexPoint::uniform(d));
        Ok(OpportunisticSender {
            block_length,
            threshold,
            fallback: ApproachableSender::new(grid, utility),
            block_states: vec![0; d],
            previous: None,
            target,
            fallen_back_at: None,
            t: 0,
            last: None,
        })
    }

    /// Period after which the fallback took over.
    pub fn fallen_back_at(&self) -> Option<u64> {
        self.fallen_back_at
    }

    pub fn approachability(&self) -> &ApproachableSender {
        &self.fallback
    }

    fn close_block(&mut self) {
        let n: u64 = self.block_states.iter().sum();
        let emp: Vec<f64> = self
            .block_states
            .iter()
            .map(|&k| k as f64 / n as f64)
            .collect();
        if let Some(prev) = &self.previous {
            let tv = 0.5
                * prev
                    .iter()
                    .zip(&emp)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            if tv > self.threshold && self.fallen_back_at.is_none() {
                self.fallen_back_at = Some(self.t);
            }
        }
        if let Ok(p) =
            SimplexPoint::new(emp.clone()).or_else(|_| SimplexPoint::normalized(emp.clone()))
        {
            self.target = self.fallback.grid().nearest(&p);
        }
        self.previous = Some(emp);
        self.block_states.iter_mut().for_each(|k| *k = 0);
    }
}

impl Sender for OpportunisticSender {
    fn forecast(&mut self, _view: &SenderView<'_>, rng: &mut AgentRng) -> Result<SimplexPoint> {
        let i = if self.fallen_back_at.is_some() {
            self.fallback.draw(rng)?
        } else {
            self.target
        };
        self.last = Some(i);
        Ok(self.fallback.grid().vertex(i).clone())
    }

    fn observe(&mut self, forecast: &SimplexPoint, state: usize) {
        let i = match self.last.take() {
            Some(i) => i,
            None => self.fallback.grid().nearest(forecast),
        };
        self.fallback.record(i, state);
        self.t += 1;
        self.block_states[state] += 1;
        if self.t.is_multiple_of(self.block_length) {
            self.close_block();
        }
    }

    fn name(&self) -> &'static str {
        "opportunistic"
    }
}
