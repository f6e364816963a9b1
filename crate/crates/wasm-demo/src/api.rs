//! JSON in, JSON out. Binary states throughout; a forecast is the
//! probability of the second state.

use calforecast::calibration::{CalibrationLedger, CalibrationReport, ErrorSchedule};
use calforecast::engine::{run_game, EnvironmentSpec, GameConfig, ReceiverSpec, SenderSpec};
use calforecast::game::{exploit_game, toy_game};
use calforecast::persuasion::{default_candidates, solve_persuasion, AtomicDistribution};
use calforecast::utility::{FinancialApp, Indicator, IndirectUtility, SharedUtility};
use calforecast::{PayoffSpec, SimplexPoint};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Longest game the page may request.
pub const MAX_HORIZON: u64 = 1_000_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn b(q: f64) -> Result<SimplexPoint, String> {
    SimplexPoint::binary(q).map_err(err)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Paid 1 on the forecasts 0.4 and 0.6 only.
    Indicator,
    /// Stage game paying the sender 1 on `[0.4, 0.6]`.
    Window,
    /// The 2×4 game.
    Exploit,
    Financial,
}

impl Preset {
    fn payoffs(self) -> Option<PayoffSpec> {
        match self {
            Preset::Window => Some(toy_game()),
            Preset::Exploit => Some(exploit_game()),
            Preset::Indicator | Preset::Financial => None,
        }
    }

    fn utility(self) -> Result<SharedUtility, String> {
        Ok(match self {
            Preset::Indicator => Arc::new(Indicator::new(vec![b(0.4)?, b(0.6)?])),
            Preset::Financial => Arc::new(FinancialApp::default_app()),
            Preset::Window | Preset::Exploit => Arc::new(IndirectUtility::sender(
                self.payoffs().expect("stage game preset"),
            )),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersuadeRequest {
    pub preset: Preset,
    pub masses: Vec<f64>,
    pub points: Vec<f64>,
    #[serde(default = "resolution")]
    pub resolution: f64,
    /// Curve samples on [0, 1].
    #[serde(default = "samples")]
    pub samples: usize,
}

fn resolution() -> f64 {
    0.01
}

fn samples() -> usize {
    401
}

#[derive(Debug, Serialize)]
pub struct PersuadeResponse {
    pub curve: Vec<[f64; 2]>,
    /// Least concave majorant over the candidates in the prior's hull.
    pub envelope: Vec<[f64; 2]>,
    pub mean: f64,
    pub value: f64,
    pub babbling: f64,
    pub honest: f64,
    pub q_star: Vec<[f64; 2]>,
    pub conditionals: Vec<f64>,
    pub forecasts: Vec<f64>,
    /// `policy[i][j] = π(forecast j | conditional i)`.
    pub policy: Vec<Vec<f64>>,
}

/// Upper hull of points sorted by abscissa.
pub fn upper_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let (a, c) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (c[0] - a[0]) * (p[1] - a[1]) - (c[1] - a[1]) * (p[0] - a[0]);
            if cross >= -1e-12 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Piecewise-linear interpolation of a hull at `x`.
pub fn hull_at(hull: &[[f64; 2]], x: f64) -> Option<f64> {
    let first = hull.first()?;
    if hull.len() == 1 {
        return ((x - first[0]).abs() < 1e-12).then_some(first[1]);
    }
    hull.windows(2)
        .find(|w| x >= w[0][0] - 1e-12 && x <= w[1][0] + 1e-12)
        .map(|w| {
            let (p, q) = (w[0], w[1]);
            let s = if q[0] > p[0] {
                ((x - p[0]) / (q[0] - p[0])).clamp(0.0, 1.0)
            } else {
                0.0
            };
            p[1] + s * (q[1] - p[1])
        })
}

pub fn solve(req: &PersuadeRequest) -> Result<PersuadeResponse, String> {
    if req.samples < 2 || req.samples > 10_001 {
        return Err("samples must lie in 2..=10001".into());
    }
    let points: Vec<SimplexPoint> = req.points.iter().map(|&q| b(q)).collect::<Result<_, _>>()?;
    let prior = AtomicDistribution::new(req.masses.clone(), points).map_err(err)?;
    let u = req.preset.utility()?;
    let payoffs = req.preset.payoffs();
    let candidates = default_candidates(&prior, payoffs.as_ref(), req.resolution).map_err(err)?;
    let sol = solve_persuasion(&prior, u.as_ref(), &candidates).map_err(err)?;

    let n = req.samples - 1;
    let curve: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let q = i as f64 / n as f64;
            Ok([q, u.value(&b(q)?)])
        })
        .collect::<Result<_, String>>()?;

    let lo = req.points.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = req.points.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut inside: Vec<[f64; 2]> = candidates
        .iter()
        .map(|c| c.scalar())
        .filter(|&q| q >= lo - 1e-12 && q <= hi + 1e-12)
        .map(|q| Ok([q, u.value(&b(q)?)]))
        .collect::<Result<_, String>>()?;
    inside.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    // keep the highest value at repeated abscissae
    inside.dedup_by(|later, kept| {
        if (later[0] - kept[0]).abs() < 1e-12 {
            kept[1] = kept[1].max(later[1]);
            true
        } else {
            false
        }
    });

    let mean = prior.barycenter();
    Ok(PersuadeResponse {
        curve,
        envelope: upper_hull(&inside),
        mean: mean.scalar(),
        value: sol.value,
        babbling: u.value(&mean),
        honest: prior.expect(u.as_ref()),
        q_star: sol.q_star.atoms().map(|(m, p)| [p.scalar(), m]).collect(),
        conditionals: sol
            .policy
            .conditionals()
            .iter()
            .map(SimplexPoint::scalar)
            .collect(),
        forecasts: sol
            .policy
            .forecasts()
            .iter()
            .map(SimplexPoint::scalar)
            .collect(),
        policy: sol.policy.probabilities().rows().to_vec(),
    })
}

pub fn persuade(request: &str) -> Result<String, String> {
    let req: PersuadeRequest = serde_json::from_str(request).map_err(err)?;
    serde_json::to_string(&solve(&req)?).map_err(err)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SenderKind {
    Honest,
    Persuasion,
    /// Honest, then the two conditionals swapped from `T/2 + 1`.
    Swap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverKind {
    Calibration,
    MeanBased,
    FaceValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayRequest {
    pub preset: Preset,
    /// Probability of the second state after the first and after the second.
    pub chain: [f64; 2],
    pub sender: SenderKind,
    pub receiver: ReceiverKind,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub every: Option<u64>,
    #[serde(default)]
    pub schedule: Option<ErrorSchedule>,
}

pub fn config(req: &PlayRequest) -> Result<GameConfig, String> {
    let payoffs = req
        .preset
        .payoffs()
        .ok_or("play needs a stage game preset (window or exploit)")?;
    if req.horizon == 0 || req.horizon > MAX_HORIZON {
        return Err(format!("horizon must lie in 1..={MAX_HORIZON}"));
    }
    let [a, c] = req.chain;
    let sender = match req.sender {
        SenderKind::Honest => SenderSpec::Honest,
        SenderKind::Persuasion => SenderSpec::Persuasion { resolution: 0.01 },
        SenderKind::Swap => SenderSpec::Swap {
            low: b(a.min(c))?,
            high: b(a.max(c))?,
            switch_at: None,
        },
    };
    let receiver = match req.receiver {
        ReceiverKind::Calibration => ReceiverSpec::Calibration,
        ReceiverKind::MeanBased => ReceiverSpec::MeanBased { gamma: 0.0 },
        ReceiverKind::FaceValue => ReceiverSpec::FaceValue,
    };
    let environment = EnvironmentSpec::Markov {
        transition: vec![b(a)?, b(c)?],
        initial: None,
        presample: true,
    };
    let mut cfg = GameConfig::new(
        environment,
        sender,
        receiver,
        payoffs,
        req.horizon,
        req.seed,
    );
    cfg.metrics_every = Some(req.every.unwrap_or((req.horizon / 200).max(1)));
    if let Some(s) = req.schedule {
        cfg.schedule = s;
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct PlayResponse {
    pub checkpoints: Vec<calforecast::engine::Checkpoint>,
    pub summary: calforecast::engine::GameSummary,
    pub sender: String,
    pub receiver: String,
}

pub fn play(request: &str) -> Result<String, String> {
    let req: PlayRequest = serde_json::from_str(request).map_err(err)?;
    let trace = run_game(&config(&req)?).map_err(err)?;
    let out = PlayResponse {
        checkpoints: trace.checkpoints,
        summary: trace.summary,
        sender: trace.sender,
        receiver: trace.receiver,
    };
    serde_json::to_string(&out).map_err(err)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub states: Vec<usize>,
    pub forecasts: Vec<f64>,
    pub schedule: ErrorSchedule,
}

pub fn report(req: &ScoreRequest) -> Result<CalibrationReport, String> {
    if req.states.len() != req.forecasts.len() {
        return Err(format!(
            "{} states but {} forecasts",
            req.states.len(),
            req.forecasts.len()
        ));
    }
    if let Some(w) = req.states.iter().find(|&&w| w > 1) {
        return Err(format!("state {w} is not 0 or 1"));
    }
    req.schedule.validate().map_err(err)?;
    let forecasts: Vec<SimplexPoint> = req
        .forecasts
        .iter()
        .map(|&q| b(q))
        .collect::<Result<_, _>>()?;
    let ledger = CalibrationLedger::from_pairs(forecasts.iter().zip(req.states.iter().copied()));
    Ok(CalibrationReport::new(&ledger, &req.schedule))
}

pub fn score(request: &str) -> Result<String, String> {
    let req: ScoreRequest = serde_json::from_str(request).map_err(err)?;
    serde_json::to_string(&report(&req)?).map_err(err)
}
