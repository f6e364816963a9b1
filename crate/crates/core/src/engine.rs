//! The repeated game loop, summaries and seed sweeps.
//!
//! Per period `t`: nature fixes the conditional `p_t`; the sender announces
//! `f_t`; the receiver acts on `f_t` (a calibration receiver tests the
//! ledger of periods `1..t-1`); `ω_t ~ p_t` is drawn on the environment
//! stream; payoffs accrue and every agent observes `(f_t, ω_t)`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{
    AgentRng, ApproachableSender, BlockAdversary, CalibrationReceiver, FaceValueReceiver,
    ForecastGrid, HonestSender, MeanBasedReceiver, Nature, NoRegretReceiver, OpportunisticSender,
    OptimalSender, PhasedSender, ProcessNature, Receiver, ReceiverView, Response, ScriptedSender,
    Sender, SenderView,
};
use crate::calibration::{
    finite_test, regret_from_totals, CalibrationLedger, ErrorSchedule, TestOutcome,
};
use crate::error::{Error, Result};
use crate::game::{PayoffSpec, Role};
use crate::persuasion::{default_candidates, solve_persuasion, SignalingPolicy};
use crate::processes::{MarkovChain, ProcessModel};
use crate::random::{sample_index, stream, ENVIRONMENT_STREAM, RECEIVER_STREAM, SENDER_STREAM};
use crate::simplex::SimplexPoint;
use crate::utility::{FinancialApp, Indicator, IndirectUtility, SharedUtility};

/// Where states come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Iid {
        p: SimplexPoint,
    },
    /// Defaults to the stationary distribution as initial law. With
    /// `presample` a period-0 state is drawn from it, so period 1 already
    /// follows a transition row.
    Markov {
        transition: Vec<SimplexPoint>,
        #[serde(default)]
        initial: Option<SimplexPoint>,
        #[serde(default = "yes")]
        presample: bool,
    },
    Scripted {
        states: Vec<usize>,
        n_states: usize,
    },
    BlockAdversary {
        weights: Vec<f64>,
        points: Vec<SimplexPoint>,
        eps: f64,
        #[serde(default = "yes")]
        punish: bool,
    },
}

fn yes() -> bool {
    true
}

impl EnvironmentSpec {
    /// The process model, absent for adaptive environments.
    pub fn process(&self) -> Result<Option<ProcessModel>> {
        Ok(Some(match self {
            EnvironmentSpec::Iid { p } => ProcessModel::iid(p.clone()),
            EnvironmentSpec::Markov {
                transition,
                initial,
                ..
            } => {
                let n = transition.len();
                let chain = MarkovChain::new(transition.clone(), SimplexPoint::uniform(n.max(1)))?;
                let initial = match initial {
                    Some(p) => p.clone(),
                    None => chain.stationary_distribution()?,
                };
                ProcessModel::markov(MarkovChain::new(transition.clone(), initial)?)
            }
            EnvironmentSpec::Scripted { states, n_states } => {
                ProcessModel::scripted(states.clone(), *n_states)?
            }
            EnvironmentSpec::BlockAdversary { .. } => return Ok(None),
        }))
    }

    pub fn n_states(&self) -> usize {
        match self {
            EnvironmentSpec::Iid { p } => p.dim(),
            EnvironmentSpec::Markov { transition, .. } => transition.len(),
            EnvironmentSpec::Scripted { n_states, .. } => *n_states,
            EnvironmentSpec::BlockAdversary { points, .. } => {
                points.first().map_or(0, SimplexPoint::dim)
            }
        }
    }

    fn build(&self, horizon: u64, rng: &mut AgentRng) -> Result<Box<dyn Nature>> {
        if let Some(model) = self.process()? {
            let nature = match (&model, self) {
                (
                    ProcessModel::Markov { chain },
                    EnvironmentSpec::Markov {
                        presample: true, ..
                    },
                ) => {
                    let s0 = sample_index(chain.initial().weights(), rng);
                    ProcessNature::new(model).with_prehistory(s0)
                }
                _ => ProcessNature::new(model),
            };
            return Ok(Box::new(nature));
        }
        let EnvironmentSpec::BlockAdversary {
            weights,
            points,
            eps,
            punish,
        } = self
        else {
            unreachable!("process specs handled above")
        };
        let adv = BlockAdversary::new(weights, points.clone(), *eps, horizon)?;
        Ok(Box::new(if *punish {
            adv
        } else {
            adv.without_punishment()
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SenderSpec {
    Honest,
    /// Samples from a fixed signaling policy.
    Optimal {
        policy: SignalingPolicy,
    },
    /// Solves the persuasion LP against the environment's distribution of
    /// conditionals over the default candidate set, then plays the solution.
    Persuasion {
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    Scripted {
        forecasts: Vec<SimplexPoint>,
    },
    /// Honest until `switch_at - 1` (default `T/2 + 1`), then the two
    /// messages swapped.
    Swap {
        low: SimplexPoint,
        high: SimplexPoint,
        #[serde(default)]
        switch_at: Option<u64>,
    },
    Approachable {
        eps: f64,
    },
    Opportunistic {
        eps: f64,
        block_length: u64,
        #[serde(default)]
        threshold: Option<f64>,
    },
}

fn default_resolution() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReceiverSpec {
    /// Tests with the configuration's error schedule.
    Calibration,
    FaceValue,
    MeanBased {
        #[serde(default)]
        gamma: f64,
    },
    NoRegret {
        #[serde(default)]
        scale: Option<f64>,
    },
}

/// The sender's forecast utility `û_S`, used by uninformed senders and by
/// [`RewardSpec::Utility`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// Indirect utility from the payoff tables.
    #[default]
    Indirect,
    /// Signal-cost plus reputation utility on binary forecasts.
    Financial {
        #[serde(default = "one")]
        kappa_sig: f64,
        #[serde(default)]
        kappa_rep: Option<f64>,
        #[serde(default = "financial_threshold")]
        threshold: f64,
    },
    Indicator {
        points: Vec<SimplexPoint>,
    },
}

fn one() -> f64 {
    1.0
}

fn financial_threshold() -> f64 {
    0.95
}

impl UtilitySpec {
    pub fn build(&self, payoffs: &PayoffSpec) -> Result<SharedUtility> {
        self.build_with(Some(payoffs))
    }

    /// As [`UtilitySpec::build`]; only the indirect utility needs payoffs.
    pub fn build_with(&self, payoffs: Option<&PayoffSpec>) -> Result<SharedUtility> {
        Ok(match self {
            UtilitySpec::Indirect => {
                let g = payoffs.ok_or_else(|| {
                    Error::InvalidParameter("indirect utility needs payoff tables".into())
                })?;
                Arc::new(IndirectUtility::sender(g.clone()))
            }
            UtilitySpec::Financial {
                kappa_sig,
                kappa_rep,
                threshold,
            } => Arc::new(FinancialApp {
                kappa_sig: *kappa_sig,
                kappa_rep: kappa_rep
                    .unwrap_or_else(|| FinancialApp::kappa_for_peak(*kappa_sig, 0.15)),
                threshold: *threshold,
            }),
            UtilitySpec::Indicator { points } => Arc::new(Indicator::new(points.clone())),
        })
    }
}

/// What the sender's stage payoff is.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardSpec {
    /// `u_S(ω_t, a_t)`, or the punishment cost on default.
    #[default]
    Table,
    /// `û_S(f_t)` whatever the receiver does.
    Utility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default)]
    pub name: String,
    pub environment: EnvironmentSpec,
    pub sender: SenderSpec,
    pub receiver: ReceiverSpec,
    pub payoffs: PayoffSpec,
    #[serde(default)]
    pub utility: UtilitySpec,
    #[serde(default)]
    pub reward: RewardSpec,
    pub horizon: u64,
    #[serde(default)]
    pub schedule: ErrorSchedule,
    #[serde(default)]
    pub seed: u64,
    /// Keep one [`PeriodRecord`] per period.
    #[serde(default)]
    pub record_periods: bool,
    /// Rolling metrics every this many periods.
    #[serde(default)]
    pub metrics_every: Option<u64>,
}

impl GameConfig {
    pub fn new(
        environment: EnvironmentSpec,
        sender: SenderSpec,
        receiver: ReceiverSpec,
        payoffs: PayoffSpec,
        horizon: u64,
        seed: u64,
    ) -> Self {
        GameConfig {
            name: String::new(),
            environment,
            sender,
            receiver,
            payoffs,
            utility: UtilitySpec::default(),
            reward: RewardSpec::default(),
            horizon,
            schedule: ErrorSchedule::default(),
            seed,
            record_periods: false,
            metrics_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.metrics_every == Some(0) {
            return Err(Error::InvalidParameter(
                "metrics interval must be at least 1".into(),
            ));
        }
        self.schedule.validate()?;
        let n = self.environment.n_states();
        if n != self.payoffs.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.payoffs.n_states(),
                got: n,
            });
        }
        Ok(())
    }

    fn build_sender(&self, utility: &SharedUtility) -> Result<Box<dyn Sender>> {
        let d = self.payoffs.n_states();
        Ok(match &self.sender {
            SenderSpec::Honest => Box::new(HonestSender),
            SenderSpec::Optimal { policy } => Box::new(OptimalSender::new(policy.clone())),
            SenderSpec::Persuasion { resolution } => {
                let model = self.environment.process()?.ok_or_else(|| {
                    Error::InvalidParameter("persuasion sender needs a process environment".into())
                })?;
                let prior = model.distribution_of_conditionals()?;
                let cands = default_candidates(&prior, Some(&self.payoffs), *resolution)?;
                Box::new(OptimalSender::new(
                    solve_persuasion(&prior, utility.as_ref(), &cands)?.policy,
                ))
            }
            SenderSpec::Scripted { forecasts } => Box::new(ScriptedSender::new(forecasts.clone())?),
            SenderSpec::Swap {
                low,
                high,
                switch_at,
            } => Box::new(PhasedSender::swap(
                low.clone(),
                high.clone(),
                switch_at.unwrap_or(self.horizon / 2 + 1),
            )?),
            SenderSpec::Approachable { eps } => Box::new(ApproachableSender::new(
                ForecastGrid::new(*eps, d)?,
                utility.clone(),
            )),
            SenderSpec::Opportunistic {
                eps,
                block_length,
                threshold,
            } => {
                let grid = ForecastGrid::new(*eps, d)?;
                Box::new(match threshold {
                    Some(th) => OpportunisticSender::with_threshold(
                        *block_length,
                        grid,
                        utility.clone(),
                        *th,
                    )?,
                    None => OpportunisticSender::new(*block_length, grid, utility.clone())?,
                })
            }
        })
    }

    fn build_receiver(&self) -> Result<Box<dyn Receiver>> {
        let g = self.payoffs.clone();
        Ok(match &self.receiver {
            ReceiverSpec::Calibration => Box::new(CalibrationReceiver::new(g, self.schedule)),
            ReceiverSpec::FaceValue => Box::new(FaceValueReceiver::new(g)),
            ReceiverSpec::MeanBased { gamma } => Box::new(MeanBasedReceiver::new(g, *gamma)?),
            ReceiverSpec::NoRegret { scale } => Box::new(NoRegretReceiver::new(g, *scale)?),
        })
    }
}

/// One period of play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: u64,
    pub conditional: Vec<f64>,
    pub forecast: Vec<f64>,
    /// Whether the receiver acted rather than defaulted.
    pub passed: bool,
    pub action: Option<usize>,
    pub state: usize,
    pub sender_payoff: f64,
    pub receiver_payoff: f64,
}

/// Rolling metrics after period `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub score: f64,
    pub epsilon: f64,
    pub sender_average: f64,
    pub receiver_average: f64,
    pub failures: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastStats {
    pub forecast: Vec<f64>,
    pub count: u64,
    pub empirical: Vec<f64>,
    /// `(N_f/T)·‖ω̄_f - f‖`.
    pub contribution: f64,
    /// Receiver's contextual regret on this forecast, weighted by `N_f/T`.
    pub regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub horizon: u64,
    pub sender_average: f64,
    pub receiver_average: f64,
    pub calibration_score: f64,
    pub terminal_epsilon: f64,
    pub terminal_outcome: TestOutcome,
    /// Periods in which the receiver defaulted.
    pub failures: u64,
    pub last_failure: Option<u64>,
    pub state_frequencies: Vec<f64>,
    pub forecasts: Vec<ForecastStats>,
}

impl GameSummary {
    pub fn max_regret(&self) -> f64 {
        self.forecasts.iter().map(|f| f.regret).fold(0.0, f64::max)
    }

    /// Forecast marginal as `(forecast, frequency)`.
    pub fn forecast_marginal(&self) -> Vec<(Vec<f64>, f64)> {
        let t = self.horizon as f64;
        self.forecasts
            .iter()
            .map(|f| (f.forecast.clone(), f.count as f64 / t))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub name: String,
    pub seed: u64,
    pub sender: String,
    pub receiver: String,
    pub nature: String,
    pub periods: Vec<PeriodRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub summary: GameSummary,
    pub ledger: CalibrationLedger,
}

/// Dense ids for announced forecasts, in the ledger's order.
#[derive(Default)]
struct Interner {
    ids: HashMap<Vec<u64>, usize>,
}

impl Interner {
    fn id(&mut self, f: &SimplexPoint, ledger: &CalibrationLedger) -> usize {
        let key: Vec<u64> = f.weights().iter().map(|w| w.to_bits()).collect();
        if let Some(&i) = self.ids.get(&key) {
            return i;
        }
        let i = ledger.index_of(f).unwrap_or(ledger.entries().len());
        self.ids.insert(key, i);
        i
    }
}

pub fn run_game(config: &GameConfig) -> Result<GameTrace> {
    config.validate()?;
    let payoffs = &config.payoffs;
    let utility = config.utility.build(payoffs)?;
    let mut env_rng = stream(config.seed, ENVIRONMENT_STREAM);
    let mut nature = config.environment.build(config.horizon, &mut env_rng)?;
    let mut sender = config.build_sender(&utility)?;
    let mut receiver = config.build_receiver()?;
    let mut sender_rng = stream(config.seed, SENDER_STREAM);
    let mut receiver_rng = stream(config.seed, RECEIVER_STREAM);

    let d = payoffs.n_states();
    let mut ledger = CalibrationLedger::new();
    let mut interner = Interner::default();
    let mut receiver_totals: Vec<f64> = Vec::new();
    let mut states = vec![0u64; d];
    let (mut sender_sum, mut receiver_sum) = (0.0, 0.0);
    let (mut failures, mut last_failure) = (0u64, None);
    let mut periods = Vec::new();
    let mut checkpoints = Vec::new();

    for t in 1..=config.horizon {
        let period = t as usize;
        let p = nature.law(t).map_err(|e| e.at(period))?;
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            }
            .at(period));
        }
        let f = sender
            .forecast(&SenderView { t, conditional: &p }, &mut sender_rng)
            .map_err(|e| e.at(period))?;
        if f.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.dim(),
            }
            .at(period));
        }
        let context = interner.id(&f, &ledger);
        let view = ReceiverView {
            t,
            forecast: &f,
            context,
        };
        let response = receiver
            .respond(&view, &mut receiver_rng)
            .map_err(|e| e.at(period))?;
        let w = sample_index(p.weights(), &mut env_rng);

        let (us, ur, action) = match response {
            Response::Act(a) => (
                payoffs.payoff(Role::Sender, w, a),
                payoffs.payoff(Role::Receiver, w, a),
                Some(a),
            ),
            Response::Default => (payoffs.punishment(), 0.0, None),
        };
        let us = match config.reward {
            RewardSpec::Table => us,
            RewardSpec::Utility => utility.value(&f),
        };
        if action.is_none() {
            failures += 1;
            last_failure = Some(t);
        }
        sender_sum += us;
        receiver_sum += ur;
        states[w] += 1;

        sender.observe(&f, w);
        receiver.observe(&view, response, w);
        nature.observe(&f, w);
        let idx = ledger.update(&f, w);
        debug_assert_eq!(idx, context);
        if idx == receiver_totals.len() {
            receiver_totals.push(0.0);
        }
        receiver_totals[idx] += ur;

        if config.record_periods {
            periods.push(PeriodRecord {
                t,
                conditional: p.weights().to_vec(),
                forecast: f.weights().to_vec(),
                passed: action.is_some(),
                action,
                state: w,
                sender_payoff: us,
                receiver_payoff: ur,
            });
        }
        if config.metrics_every.is_some_and(|n| t % n == 0) {
            checkpoints.push(Checkpoint {
                t,
                score: ledger.score(),
                epsilon: config.schedule.epsilon(t),
                sender_average: sender_sum / t as f64,
                receiver_average: receiver_sum / t as f64,
                failures,
            });
        }
    }

    let horizon = config.horizon;
    let tf = horizon as f64;
    let forecasts = ledger
        .entries()
        .iter()
        .zip(&receiver_totals)
        .map(|(e, &total)| {
            let empirical = e.empirical();
            ForecastStats {
                forecast: e.forecast.weights().to_vec(),
                count: e.count,
                contribution: e.count as f64 / tf * empirical.distance(&e.forecast),
                empirical: empirical.into_inner(),
                regret: regret_from_totals(e.count, &e.tally, total, horizon, payoffs),
            }
        })
        .collect();
    let summary = GameSummary {
        horizon,
        sender_average: sender_sum / tf,
        receiver_average: receiver_sum / tf,
        calibration_score: ledger.score(),
        terminal_epsilon: config.schedule.epsilon(horizon),
        terminal_outcome: finite_test(&ledger, &config.schedule),
        failures,
        last_failure,
        state_frequencies: states.iter().map(|&k| k as f64 / tf).collect(),
        forecasts,
    };
    Ok(GameTrace {
        name: config.name.clone(),
        seed: config.seed,
        sender: sender.name().to_string(),
        receiver: receiver.name().to_string(),
        nature: nature.name().to_string(),
        periods,
        checkpoints,
        summary,
        ledger,
    })
}

/// Arithmetic mean of a role's stage payoffs over the recorded periods.
pub fn long_run_average(trace: &GameTrace, role: Role) -> Result<f64> {
    if trace.periods.is_empty() {
        return Err(Error::InvalidParameter(
            "trace has no recorded periods".into(),
        ));
    }
    let sum: f64 = trace
        .periods
        .iter()
        .map(|r| match role {
            Role::Sender => r.sender_payoff,
            Role::Receiver => r.receiver_payoff,
        })
        .sum();
    Ok(sum / trace.periods.len() as f64)
}

impl GameTrace {
    /// One row per period: `t, p_*, f_*, passed, action, state, u_s, u_r`.
    pub fn write_periods_csv<W: Write>(&self, mut out: W, precision: usize) -> std::io::Result<()> {
        let d = self.summary.state_frequencies.len();
        write!(out, "t")?;
        for w in 0..d {
            write!(out, ",p_{w}")?;
        }
        for w in 0..d {
            write!(out, ",f_{w}")?;
        }
        writeln!(out, ",passed,action,state,u_s,u_r")?;
        for r in &self.periods {
            write!(out, "{}", r.t)?;
            for v in r.conditional.iter().chain(&r.forecast) {
                write!(out, ",{v:.precision$}")?;
            }
            let a = r.action.map_or(String::from("default"), |a| a.to_string());
            writeln!(
                out,
                ",{},{a},{},{:.precision$},{:.precision$}",
                u8::from(r.passed),
                r.state,
                r.sender_payoff,
                r.receiver_payoff
            )?;
        }
        Ok(())
    }

    pub fn write_checkpoints_csv<W: Write>(
        &self,
        mut out: W,
        precision: usize,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "t,score,epsilon,sender_average,receiver_average,failures"
        )?;
        for c in &self.checkpoints {
            writeln!(
                out,
                "{},{:.precision$},{:.precision$},{:.precision$},{:.precision$},{}",
                c.t, c.score, c.epsilon, c.sender_average, c.receiver_average, c.failures
            )?;
        }
        Ok(())
    }
}

/// Mean and standard deviation of terminal metrics for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: usize,
    pub name: String,
    pub runs: usize,
    pub sender_mean: f64,
    pub sender_std: f64,
    pub receiver_mean: f64,
    pub receiver_std: f64,
    pub score_mean: f64,
    pub score_std: f64,
    pub failures_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub config: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub config: usize,
    pub seed: u64,
    pub summary: GameSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<SweepRun>,
    pub failures: Vec<SweepFailure>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

type CellResult = (usize, u64, std::result::Result<GameSummary, String>);

fn run_cell(configs: &[GameConfig], (i, seed): (usize, u64)) -> CellResult {
    let mut c = configs[i].clone();
    c.seed = seed;
    c.record_periods = false;
    (
        i,
        seed,
        run_game(&c).map(|t| t.summary).map_err(|e| e.to_string()),
    )
}

/// Every configuration under every seed; failed cells are reported, not fatal.
pub fn sweep(configs: &[GameConfig], seeds: &[u64]) -> SweepTable {
    let cells: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    #[cfg(feature = "parallel")]
    let results: Vec<CellResult> = {
        use rayon::prelude::*;
        cells
            .into_par_iter()
            .map(|c| run_cell(configs, c))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<CellResult> = cells.into_iter().map(|c| run_cell(configs, c)).collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (config, seed, r) in results {
        match r {
            Ok(summary) => runs.push(SweepRun {
                config,
                seed,
                summary,
            }),
            Err(error) => failures.push(SweepFailure {
                config,
                seed,
                error,
            }),
        }
    }
    let rows = configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mine: Vec<&GameSummary> = runs
                .iter()
                .filter(|r| r.config == i)
                .map(|r| &r.summary)
                .collect();
            let col = |f: fn(&GameSummary) -> f64| {
                mean_std(&mine.iter().map(|s| f(s)).collect::<Vec<_>>())
            };
            let (sender_mean, sender_std) = col(|s| s.sender_average);
            let (receiver_mean, receiver_std) = col(|s| s.receiver_average);
            let (score_mean, score_std) = col(|s| s.calibration_score);
            SweepRow {
                config: i,
                name: c.name.clone(),
                runs: mine.len(),
                sender_mean,
                sender_std,
                receiver_mean,
                receiver_std,
                score_mean,
                score_std,
                failures_mean: col(|s| s.failures as f64).0,
            }
        })
        .collect();
    SweepTable {
        rows,
        runs,
        failures,
    }
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut out: W, precision: usize) -> std::io::Result<()> {
        writeln!(
            out,
            "config,name,runs,sender_mean,sender_std,receiver_mean,receiver_std,score_mean,score_std,failures_mean"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$}",
                r.config,
                r.name,
                r.runs,
                r.sender_mean,
                r.sender_std,
                r.receiver_mean,
                r.receiver_std,
                r.score_mean,
                r.score_std,
                r.failures_mean,
                p = precision
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{exploit_game, toy_game};

    fn b(q: f64) -> SimplexPoint {
        SimplexPoint::binary(q).unwrap()
    }

    #[test]
    fn config_roundtrip_with_scalar_shorthand() {
        let json = r#"{"environment": {"kind": "markov", "transition": [0.2, 0.8]},
            "sender": {"kind": "honest"}, "receiver": {"kind": "calibration"},
            "payoffs": {"actions": ["a"], "sender": [[1.0], [1.0]], "receiver": [[0.0], [0.0]], "punishment": 0.0},
            "horizon": 10}"#;
        let c: GameConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.environment, example_chain());
        let back: GameConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(
            serde_json::from_str::<GameConfig>(&json.replace("\"horizon\"", "\"horizn\"")).is_err()
        );
    }

    fn example_chain() -> EnvironmentSpec {
        EnvironmentSpec::Markov {
            transition: vec![b(0.2), b(0.8)],
            initial: None,
            presample: true,
        }
    }

    #[test]
    fn all_default_trace() {
        // F3 against an unforgiving constant schedule: default from period 2 on
        let mut c = GameConfig::new(
            EnvironmentSpec::Iid { p: b(0.0) },
            SenderSpec::Scripted {
                forecasts: vec![b(1.0); 5],
            },
            ReceiverSpec::Calibration,
            exploit_game(),
            5,
            0,
        );
        c.schedule = ErrorSchedule::constant(0.01).unwrap();
        c.record_periods = true;
        let tr = run_game(&c).unwrap();
        assert_eq!(tr.summary.failures, 4);
        assert!(tr.periods[1..]
            .iter()
            .all(|r| r.sender_payoff == exploit_game().punishment() && r.receiver_payoff == 0.0));
        assert_eq!(
            long_run_average(&tr, Role::Sender).unwrap(),
            tr.summary.sender_average
        );
    }

    #[test]
    fn honest_on_example_chain() {
        let mut c = GameConfig::new(
            example_chain(),
            SenderSpec::Honest,
            ReceiverSpec::Calibration,
            exploit_game(),
            20_000,
            9,
        );
        c.metrics_every = Some(5_000);
        let tr = run_game(&c).unwrap();
        assert!((tr.summary.sender_average - 2.0).abs() < 0.05);
        assert_eq!(tr.checkpoints.len(), 4);
        assert_eq!(tr.checkpoints[3].sender_average, tr.summary.sender_average);
    }

    #[test]
    fn persuasion_sender_on_toy_chain() {
        let c = GameConfig::new(
            example_chain(),
            SenderSpec::Persuasion { resolution: 0.1 },
            ReceiverSpec::Calibration,
            toy_game(),
            20_000,
            1,
        );
        let tr = run_game(&c).unwrap();
        assert!(
            (tr.summary.sender_average - 1.0).abs() < 0.05,
            "{}",
            tr.summary.sender_average
        );
        assert!(tr.summary.calibration_score < 0.03);
    }

    #[test]
    fn errors_carry_period() {
        let c = GameConfig::new(
            EnvironmentSpec::Iid { p: b(0.5) },
            SenderSpec::Scripted {
                forecasts: vec![b(0.5); 3],
            },
            ReceiverSpec::FaceValue,
            exploit_game(),
            4,
            0,
        );
        assert!(matches!(
            run_game(&c),
            Err(Error::AtPeriod { period: 4, .. })
        ));
    }

    #[test]
    fn sweep_rows() {
        let c = GameConfig::new(
            example_chain(),
            SenderSpec::Honest,
            ReceiverSpec::FaceValue,
            exploit_game(),
            500,
            0,
        );
        let one = sweep(std::slice::from_ref(&c), &[3]);
        assert_eq!(
            one.rows[0].sender_mean,
            run_game(&GameConfig {
                seed: 3,
                ..c.clone()
            })
            .unwrap()
            .summary
            .sender_average
        );
        assert_eq!(one.rows[0].sender_std, 0.0);
        let two = sweep(std::slice::from_ref(&c), &[3, 3]);
        assert_eq!(two.runs[0].summary, two.runs[1].summary);
        let mut bad = c.clone();
        bad.horizon = 0;
        let mixed = sweep(&[c, bad], &[1]);
        assert_eq!(mixed.failures.len(), 1);
        assert_eq!(mixed.rows[0].runs, 1);
    }
}
