//! Average-reward extension where the receiver's action moves the state.
//!
//! Stationary play is a distribution `η` over (previous forecast, previous
//! state, next forecast). Feasible `η` are invariant under
//! `T(ω | ω̃, â(f̃))` and calibrated: `η(f, ω) = η(f) f(ω)`.

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationLedger;
use crate::error::{Error, Result};
use crate::game::{PayoffSpec, Role};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::random::{sample_index, stream, ENVIRONMENT_STREAM, SENDER_STREAM};
use crate::simplex::{SimplexPoint, FORECAST_TOL};
use crate::utility::Utility;

const MASS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMdp")]
pub struct MdpModel {
    /// `transitions[a][ω]` is the law of the next state.
    transitions: Vec<Vec<SimplexPoint>>,
    payoffs: PayoffSpec,
    forecasts: Vec<SimplexPoint>,
    #[serde(skip)]
    actions: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMdp {
    transitions: Vec<Vec<SimplexPoint>>,
    payoffs: PayoffSpec,
    forecasts: Vec<SimplexPoint>,
}

impl TryFrom<RawMdp> for MdpModel {
    type Error = Error;

    fn try_from(r: RawMdp) -> Result<Self> {
        MdpModel::new(r.transitions, r.payoffs, r.forecasts)
    }
}

impl MdpModel {
    pub fn new(
        transitions: Vec<Vec<SimplexPoint>>,
        payoffs: PayoffSpec,
        forecasts: Vec<SimplexPoint>,
    ) -> Result<Self> {
        let d = payoffs.n_states();
        if transitions.len() != payoffs.n_actions() {
            return Err(Error::DimensionMismatch {
                expected: payoffs.n_actions(),
                got: transitions.len(),
            });
        }
        for rows in &transitions {
            if rows.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: rows.len(),
                });
            }
            if let Some(r) = rows.iter().find(|r| r.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.dim(),
                });
            }
        }
        if forecasts.is_empty() {
            return Err(Error::InvalidParameter(
                "forecast set must not be empty".into(),
            ));
        }
        if let Some(f) = forecasts.iter().find(|f| f.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.dim(),
            });
        }
        let actions = forecasts.iter().map(|f| payoffs.best_response(f)).collect();
        Ok(MdpModel {
            transitions,
            payoffs,
            forecasts,
            actions,
        })
    }

    /// Same transition rows for every action.
    pub fn action_independent(
        rows: Vec<SimplexPoint>,
        payoffs: PayoffSpec,
        forecasts: Vec<SimplexPoint>,
    ) -> Result<Self> {
        let n = payoffs.n_actions();
        MdpModel::new(vec![rows; n], payoffs, forecasts)
    }

    pub fn n_states(&self) -> usize {
        self.payoffs.n_states()
    }

    pub fn forecasts(&self) -> &[SimplexPoint] {
        &self.forecasts
    }

    pub fn payoffs(&self) -> &PayoffSpec {
        &self.payoffs
    }

    /// `â(f)` for forecast index `f`.
    pub fn action(&self, f: usize) -> usize {
        self.actions[f]
    }

    /// `T(· | ω̃, â(f̃))`.
    pub fn law(&self, prev_forecast: usize, prev_state: usize) -> &SimplexPoint {
        &self.transitions[self.actions[prev_forecast]][prev_state]
    }
}

/// `η` over `F × Ω × F`, stored `[f̃][ω̃][f]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointInvariant {
    n_forecasts: usize,
    n_states: usize,
    mass: Vec<f64>,
}

impl JointInvariant {
    pub fn new(n_forecasts: usize, n_states: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != n_forecasts * n_states * n_forecasts {
            return Err(Error::DimensionMismatch {
                expected: n_forecasts * n_states * n_forecasts,
                got: mass.len(),
            });
        }
        if mass.iter().any(|m| !(*m >= -1e-9)) || (mass.iter().sum::<f64>() - 1.0).abs() > 1e-7 {
            return Err(Error::InvalidDistribution(format!("joint masses {mass:?}")));
        }
        Ok(JointInvariant {
            n_forecasts,
            n_states,
            mass: mass.into_iter().map(|m| m.max(0.0)).collect(),
        })
    }

    fn idx(&self, pf: usize, ps: usize, f: usize) -> usize {
        (pf * self.n_states + ps) * self.n_forecasts + f
    }

    pub fn n_forecasts(&self) -> usize {
        self.n_forecasts
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, prev_forecast: usize, prev_state: usize, forecast: usize) -> f64 {
        self.mass[self.idx(prev_forecast, prev_state, forecast)]
    }

    /// `η(f, ω) = Σ_f'' η(f, ω, f'')`.
    pub fn pair(&self, f: usize, w: usize) -> f64 {
        (0..self.n_forecasts).map(|g| self.get(f, w, g)).sum()
    }

    /// `η(f)`.
    pub fn marginal(&self, f: usize) -> f64 {
        (0..self.n_states).map(|w| self.pair(f, w)).sum()
    }

    pub fn mix(&self, other: &JointInvariant, lambda: f64) -> Result<JointInvariant> {
        if self.n_forecasts != other.n_forecasts || self.n_states != other.n_states {
            return Err(Error::DimensionMismatch {
                expected: self.mass.len(),
                got: other.mass.len(),
            });
        }
        let mass = self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        JointInvariant::new(self.n_forecasts, self.n_states, mass)
    }

    /// Largest violation of invariance and calibration under `model`.
    pub fn residual(&self, model: &MdpModel) -> f64 {
        let (nf, d) = (self.n_forecasts, self.n_states);
        let mut worst: f64 = 0.0;
        for f in 0..nf {
            let m = self.marginal(f);
            for w in 0..d {
                let inflow: f64 = (0..nf)
                    .flat_map(|pf| (0..d).map(move |ps| (pf, ps)))
                    .map(|(pf, ps)| self.get(pf, ps, f) * model.law(pf, ps).get(w))
                    .sum();
                let pair = self.pair(f, w);
                worst = worst
                    .max((inflow - pair).abs())
                    .max((pair - m * model.forecasts[f].get(w)).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpSolution {
    pub value: f64,
    pub eta: JointInvariant,
}

/// Maximizes `Σ_f η(f) û_S(f)` over invariant calibrated `η`.
pub fn solve_feasible_lp(model: &MdpModel, u: &dyn Utility) -> Result<MdpSolution> {
    let nf = model.forecasts.len();
    let d = model.n_states();
    let var = |pf: usize, ps: usize, f: usize| (pf * d + ps) * nf + f;
    let n = nf * d * nf;
    let values: Vec<f64> = model.forecasts.iter().map(|f| u.value(f)).collect();
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "utility is not finite at forecast {j}"
        )));
    }
    let mut lp = LinearProgram::new(n, Sense::Maximize);
    for pf in 0..nf {
        for ps in 0..d {
            for f in 0..nf {
                // η(f̃) û(f̃) summed through the first two coordinates
                lp.set_cost(var(pf, ps, f), values[pf]);
            }
        }
    }
    for f in 0..nf {
        for w in 0..d {
            // inflow into (f, ω) equals η(f, ω)
            let mut row = vec![0.0; n];
            for pf in 0..nf {
                for ps in 0..d {
                    row[var(pf, ps, f)] += model.law(pf, ps).get(w);
                }
            }
            for g in 0..nf {
                row[var(f, w, g)] -= 1.0;
            }
            lp.add_constraint(row, Relation::Eq, 0.0);
            if w + 1 < d {
                // η(f, ω) = f(ω) Σ_ω' η(f, ω')
                let mut row = vec![0.0; n];
                let fw = model.forecasts[f].get(w);
                for w2 in 0..d {
                    for g in 0..nf {
                        row[var(f, w2, g)] -= fw;
                    }
                }
                for g in 0..nf {
                    row[var(f, w, g)] += 1.0;
                }
                lp.add_constraint(row, Relation::Eq, 0.0);
            }
        }
    }
    lp.add_constraint(vec![1.0; n], Relation::Eq, 1.0);
    let sol = lp.solve().map_err(|e| match e {
        LpError::Infeasible(_) => {
            Error::Infeasible("no invariant calibrated distribution on this forecast set".into())
        }
        other => Error::Lp(other),
    })?;
    Ok(MdpSolution {
        value: sol.objective,
        eta: JointInvariant::new(nf, d, sol.x)?,
    })
}

/// `σ(f | f̃, ω̃)`, one distribution over forecasts per history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryOnePolicy {
    n_forecasts: usize,
    n_states: usize,
    /// `[f̃][ω̃]` rows.
    rows: Vec<Vec<Vec<f64>>>,
}

impl MemoryOnePolicy {
    pub fn new(rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let nf = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if nf == 0 || d == 0 {
            return Err(Error::InvalidParameter("empty policy".into()));
        }
        for r in rows.iter().flatten() {
            if r.len() != nf
                || r.iter().any(|p| !(*p >= 0.0))
                || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidDistribution(format!("policy row {r:?}")));
            }
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: 0,
            });
        }
        Ok(MemoryOnePolicy {
            n_forecasts: nf,
            n_states: d,
            rows,
        })
    }

    /// The same forecast law after every history.
    pub fn constant(n_states: usize, weights: Vec<f64>) -> Result<Self> {
        let nf = weights.len();
        MemoryOnePolicy::new(vec![vec![weights; n_states]; nf])
    }

    pub fn row(&self, prev_forecast: usize, prev_state: usize) -> &[f64] {
        &self.rows[prev_forecast][prev_state]
    }

    pub fn n_forecasts(&self) -> usize {
        self.n_forecasts
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
}

/// Conditional ratios of `η`; the marginal `η(f)` after zero-mass histories.
pub fn extract_policy(eta: &JointInvariant) -> MemoryOnePolicy {
    let (nf, d) = (eta.n_forecasts, eta.n_states);
    let marginal: Vec<f64> = (0..nf).map(|f| eta.marginal(f)).collect();
    let total: f64 = marginal.iter().sum();
    let marginal: Vec<f64> = marginal.iter().map(|m| m / total).collect();
    let rows = (0..nf)
        .map(|pf| {
            (0..d)
                .map(|ps| {
                    let h = eta.pair(pf, ps);
                    if h > MASS_TOL {
                        (0..nf).map(|f| eta.get(pf, ps, f) / h).collect()
                    } else {
                        marginal.clone()
                    }
                })
                .collect()
        })
        .collect();
    MemoryOnePolicy {
        n_forecasts: nf,
        n_states: d,
        rows,
    }
}

fn check_shapes(model: &MdpModel, policy: &MemoryOnePolicy) -> Result<()> {
    if policy.n_forecasts != model.forecasts.len() {
        return Err(Error::DimensionMismatch {
            expected: model.forecasts.len(),
            got: policy.n_forecasts,
        });
    }
    if policy.n_states != model.n_states() {
        return Err(Error::DimensionMismatch {
            expected: model.n_states(),
            got: policy.n_states,
        });
    }
    Ok(())
}

/// Closed communicating classes of the chain induced on `F × Ω`, each as a
/// list of `(f, ω)` nodes.
pub fn recurrent_classes(
    model: &MdpModel,
    policy: &MemoryOnePolicy,
) -> Result<Vec<Vec<(usize, usize)>>> {
    check_shapes(model, policy)?;
    let (nf, d) = (policy.n_forecasts, policy.n_states);
    let n = nf * d;
    let node = |f: usize, w: usize| f * d + w;
    let mut adj = vec![Vec::new(); n];
    for pf in 0..nf {
        for ps in 0..d {
            let law = model.law(pf, ps);
            for f in 0..nf {
                if policy.row(pf, ps)[f] <= 0.0 {
                    continue;
                }
                for w in 0..d {
                    if law.get(w) > 0.0 {
                        adj[node(pf, ps)].push(node(f, w));
                    }
                }
            }
        }
    }
    let comp = strongly_connected(&adj);
    let n_comp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut closed = vec![true; n_comp];
    for (u, out) in adj.iter().enumerate() {
        if out.iter().any(|&v| comp[v] != comp[u]) {
            closed[comp[u]] = false;
        }
    }
    Ok((0..n_comp)
        .filter(|&c| closed[c])
        .map(|c| {
            (0..n)
                .filter(|&u| comp[u] == c)
                .map(|u| (u / d, u % d))
                .collect()
        })
        .collect())
}

/// Errors with [`Error::Multichain`] unless exactly one class is closed.
pub fn check_unichain(model: &MdpModel, policy: &MemoryOnePolicy) -> Result<()> {
    let k = recurrent_classes(model, policy)?.len();
    if k == 1 {
        Ok(())
    } else {
        Err(Error::Multichain(k))
    }
}

/// Iterative Kosaraju: component id per node.
fn strongly_connected(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((u, i)) = stack.pop() {
            if i < adj[u].len() {
                stack.push((u, i + 1));
                let v = adj[u][i];
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
            }
        }
    }
    let mut rev = vec![Vec::new(); n];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            rev[v].push(u);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut c = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = c;
        while let Some(u) = stack.pop() {
            for &v in &rev[u] {
                if comp[v] == usize::MAX {
                    comp[v] = c;
                    stack.push(v);
                }
            }
        }
        c += 1;
    }
    comp
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpTrace {
    pub horizon: u64,
    /// Average of `u_S(ω_t, â(f_t))`.
    pub sender_average: f64,
    /// Average of `û_S(f_t)`.
    pub utility_average: f64,
    pub calibration_score: f64,
    pub forecast_marginal: Vec<f64>,
    /// Empirical `η`, stored like [`JointInvariant`].
    pub joint: Vec<f64>,
    pub warnings: Vec<String>,
}

impl MdpTrace {
    pub fn max_joint_error(&self, eta: &JointInvariant) -> f64 {
        self.joint
            .iter()
            .zip(eta.masses())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed loop `f_t ~ σ(·|f_{t-1}, ω_{t-1})`, `ω_t ~ T(·|ω_{t-1}, â(f_{t-1}))`.
///
/// The period-0 history is drawn from `start` (typically `η(f, ω)`), or
/// uniformly if `None`. A multichain induced chain produces a warning.
pub fn simulate_policy(
    model: &MdpModel,
    policy: &MemoryOnePolicy,
    u: &dyn Utility,
    start: Option<&JointInvariant>,
    horizon: u64,
    seed: u64,
) -> Result<MdpTrace> {
    check_shapes(model, policy)?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let (nf, d) = (policy.n_forecasts, policy.n_states);
    let mut warnings = Vec::new();
    if let Err(e) = check_unichain(model, policy) {
        warnings.push(format!("{e}; long-run averages depend on the start"));
    }
    let mut env = stream(seed, ENVIRONMENT_STREAM);
    let mut snd = stream(seed, SENDER_STREAM);
    let start_weights: Vec<f64> = match start {
        Some(eta) => (0..nf)
            .flat_map(|f| (0..d).map(move |w| eta.pair(f, w)))
            .collect(),
        None => vec![1.0; nf * d],
    };
    let s0 = sample_index(&start_weights, &mut env);
    let (mut pf, mut ps) = (s0 / d, s0 % d);

    let rewards: Vec<f64> = model.forecasts.iter().map(|f| u.value(f)).collect();
    let mut ledger = CalibrationLedger::new();
    let mut joint = vec![0.0; nf * d * nf];
    let mut counts = vec![0u64; nf];
    let (mut table, mut util) = (0.0, 0.0);
    for _ in 0..horizon {
        let f = sample_index(policy.row(pf, ps), &mut snd);
        let w = sample_index(model.law(pf, ps).weights(), &mut env);
        table += model.payoffs.payoff(Role::Sender, w, model.action(f));
        util += rewards[f];
        joint[(pf * d + ps) * nf + f] += 1.0;
        counts[f] += 1;
        ledger.update(&model.forecasts[f], w);
        pf = f;
        ps = w;
    }
    let t = horizon as f64;
    Ok(MdpTrace {
        horizon,
        sender_average: table / t,
        utility_average: util / t,
        calibration_score: ledger.score(),
        forecast_marginal: counts.iter().map(|&c| c as f64 / t).collect(),
        joint: joint.into_iter().map(|c| c / t).collect(),
        warnings,
    })
}

/// Whether the forecast set contains `p` (up to the forecast tolerance).
pub fn forecast_index(model: &MdpModel, p: &SimplexPoint) -> Option<usize> {
    model
        .forecasts
        .iter()
        .position(|f| f.approx_eq(p, FORECAST_TOL))
}
