//! Pinned scenarios and their acceptance bands.

use calforecast::agents::ForecastGrid;
use calforecast::engine::{run_game, EnvironmentSpec, GameConfig, GameSummary, SenderSpec};
use calforecast::persuasion::convex_hull_value;
use calforecast::SimplexPoint;

use crate::commands::{run_games, run_mdp, run_persuasion, run_replay, GameResult, Overrides};
use crate::output::{fixed, table};
use crate::scenario::Scenario;
use crate::CliError;

pub const SCENARIOS: [(&str, &str); 6] = [
    ("table1", include_str!("../scenarios/table1.toml")),
    (
        "toy-persuasion",
        include_str!("../scenarios/toy-persuasion.toml"),
    ),
    (
        "financial-app",
        include_str!("../scenarios/financial-app.toml"),
    ),
    (
        "regret-exploit",
        include_str!("../scenarios/regret-exploit.toml"),
    ),
    (
        "uninformed-benchmarks",
        include_str!("../scenarios/uninformed-benchmarks.toml"),
    ),
    (
        "mdp-crosscheck",
        include_str!("../scenarios/mdp-crosscheck.toml"),
    ),
];

/// Embedded example scenarios that are not reproduction targets.
pub const EXAMPLES: [(&str, &str); 1] = [(
    "honest-sweep",
    include_str!("../scenarios/honest-sweep.toml"),
)];

pub fn builtin(id: &str) -> Option<&'static str> {
    SCENARIOS
        .iter()
        .chain(EXAMPLES.iter())
        .find(|(k, _)| *k == id)
        .map(|(_, v)| *v)
}

pub fn ids() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(k, _)| *k).collect()
}

#[derive(Clone, Debug)]
pub struct Check {
    pub id: &'static str,
    pub what: String,
    pub computed: String,
    pub band: String,
    pub ok: bool,
}

struct Checks {
    id: &'static str,
    list: Vec<Check>,
}

impl Checks {
    fn push(
        &mut self,
        what: impl Into<String>,
        computed: String,
        band: impl Into<String>,
        ok: bool,
    ) {
        self.list.push(Check {
            id: self.id,
            what: what.into(),
            computed,
            band: band.into(),
            ok,
        });
    }

    fn within(&mut self, what: impl Into<String>, x: f64, target: f64, tol: f64) {
        let band = format!("{} +- {tol:e}", fixed(target));
        self.push(what, fixed(x), band, (x - target).abs() <= tol);
    }

    fn between(&mut self, what: impl Into<String>, x: f64, lo: f64, hi: f64) {
        self.push(
            what,
            fixed(x),
            format!("[{}, {}]", fixed(lo), fixed(hi)),
            (lo..=hi).contains(&x),
        );
    }

    fn at_most(&mut self, what: impl Into<String>, x: f64, hi: f64) {
        self.push(what, fixed(x), format!("<= {}", fixed(hi)), x <= hi);
    }

    fn count(&mut self, what: impl Into<String>, good: usize, total: usize, need: usize) {
        self.push(
            what,
            format!("{good}/{total}"),
            format!(">= {need}/{total}"),
            good >= need,
        );
    }
}

fn b(q: f64) -> SimplexPoint {
    SimplexPoint::binary(q).expect("binary point")
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn sweep_summaries(s: &Scenario, i: usize) -> Result<Vec<GameSummary>, CliError> {
    match run_games(&s.games[i], Overrides::default())? {
        GameResult::Sweep(t) => Ok(t.runs.into_iter().map(|r| r.summary).collect()),
        GameResult::Single(t) => Ok(vec![t.summary]),
    }
}

fn single(s: &Scenario, i: usize) -> Result<GameSummary, CliError> {
    match run_games(&s.games[i], Overrides::default())? {
        GameResult::Single(t) => Ok(t.summary),
        GameResult::Sweep(t) => t
            .runs
            .into_iter()
            .next()
            .map(|r| r.summary)
            .ok_or_else(|| runtime("empty sweep")),
    }
}

fn table1(s: &Scenario, c: &mut Checks) {
    let r = run_replay(&s.replay[0]);
    for (row, expect) in r.rows.iter().zip([true, true, false]) {
        let got = row.report.outcome.passed();
        let word = |p: bool| if p { "pass" } else { "fail" };
        c.push(
            format!("{} test", row.name),
            word(got).into(),
            word(expect),
            got == expect,
        );
    }
    if let Some(f3) = r.rows.get(2) {
        c.within("F3 score", f3.report.score, 0.2 * 2f64.sqrt(), 1e-6);
    }
}

fn toy_persuasion(s: &Scenario, c: &mut Checks) -> Result<(), CliError> {
    let r = run_persuasion(&s.persuasion[0])?;
    c.within("value", r.value, 1.0, 1e-9);
    c.push(
        "support size",
        r.q_star.len().to_string(),
        "2",
        r.q_star.len() == 2,
    );
    c.within("Q* mass at 0.4", r.q_star.mass_of(&b(0.4)), 0.5, 1e-9);
    c.within("Q* mass at 0.6", r.q_star.mass_of(&b(0.6)), 0.5, 1e-9);
    let g = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
    let mut err: f64 = 0.0;
    for (i, p) in [0.2, 0.8].iter().enumerate() {
        for (j, q) in [0.4, 0.6].iter().enumerate() {
            err = err.max((r.policy.probability(&b(*q), &b(*p)) - g[i][j]).abs());
        }
    }
    c.at_most("max |G - [[2/3,1/3],[1/3,2/3]]|", err, 1e-6);
    Ok(())
}

fn financial_app(s: &Scenario, c: &mut Checks) -> Result<(), CliError> {
    let r = run_persuasion(&s.persuasion[0])?;
    c.within("Q* mass at 0.15", r.q_star.mass_of(&b(0.15)), 0.5, 1e-9);
    c.within("Q* mass at 0.85", r.q_star.mass_of(&b(0.85)), 0.5, 1e-9);
    c.within(
        "pi(0.15 | 0.05)",
        r.policy.probability(&b(0.15), &b(0.05)),
        8.0 / 9.0,
        1e-6,
    );
    c.within(
        "pi(0.85 | 0.95)",
        r.policy.probability(&b(0.85), &b(0.95)),
        8.0 / 9.0,
        1e-6,
    );

    let opt = single(s, 0)?;
    let share = |q: f64| -> f64 {
        opt.forecast_marginal()
            .iter()
            .filter(|(f, _)| (f[1] - q).abs() < 1e-9)
            .map(|(_, m)| m)
            .sum()
    };
    c.within("optimal sender: share of 0.15", share(0.15), 0.5, 0.02);
    c.within("optimal sender: share of 0.85", share(0.85), 0.5, 0.02);
    c.within(
        "optimal sender: average vs value",
        opt.sender_average,
        r.value,
        0.05,
    );
    c.at_most("optimal sender: score", opt.calibration_score, 0.02);

    let spec = &s.games[1].config;
    let SenderSpec::Opportunistic { eps, .. } = spec.sender else {
        return Err(CliError::Invalid(
            "financial-app: second game must use the opportunistic sender".into(),
        ));
    };
    let u = spec.utility.build(&spec.payoffs).map_err(runtime)?;
    let grid = ForecastGrid::new(eps, 2).map_err(runtime)?;
    let target = u.value(grid.nearest_forecast(&b(0.5)));
    let opp = single(s, 1)?;
    c.within(
        "opportunistic: average vs u(f*(0.5))",
        opp.sender_average,
        target,
        0.05,
    );
    c.at_most("opportunistic: score", opp.calibration_score, eps + 0.02);
    Ok(())
}

fn regret_exploit(s: &Scenario, c: &mut Checks) -> Result<(), CliError> {
    let r = run_persuasion(&s.persuasion[0])?;
    c.within("calibration benchmark value", r.value, 2.0, 1e-9);
    let honest = single(s, 0)?;
    c.within("honest average", honest.sender_average, 2.0, 0.05);

    let spec = &s.games[1];
    let mut config: GameConfig = spec.config.clone();
    let t = config.horizon;
    config.metrics_every = Some(t / 2);
    let seeds = spec.seed_list().unwrap_or_else(|| vec![config.seed]);
    let (mut total, mut phase2) = (0.0, 0.0);
    for &seed in &seeds {
        config.seed = seed;
        let trace = run_game(&config).map_err(runtime)?;
        let half = trace
            .checkpoints
            .first()
            .ok_or_else(|| runtime("no half-way checkpoint"))?
            .sender_average;
        total += trace.summary.sender_average;
        phase2 += 2.0 * trace.summary.sender_average - half;
    }
    let n = seeds.len() as f64;
    c.between("swap: total average", total / n, 2.45, 2.65);
    c.between("swap: second-half average", phase2 / n, 3.0, 3.2);
    c.push(
        "swap: exceeds benchmark",
        fixed(total / n),
        ">= 2.100000",
        total / n >= 2.1,
    );
    Ok(())
}

fn uninformed(s: &Scenario, c: &mut Checks) -> Result<(), CliError> {
    for (i, g) in s.games.iter().enumerate() {
        let spec = &g.config;
        let SenderSpec::Approachable { eps } = spec.sender else {
            return Err(CliError::Invalid(format!(
                "uninformed-benchmarks: game {} must use the approachable sender",
                g.name
            )));
        };
        let u = spec.utility.build(&spec.payoffs).map_err(runtime)?;
        let grid = ForecastGrid::new(eps, spec.payoffs.n_states()).map_err(runtime)?;
        let runs = sweep_summaries(s, i)?;
        let mut hull_ok = 0;
        let mut upper_ok = 0;
        let upper = match &spec.environment {
            EnvironmentSpec::BlockAdversary {
                weights, points, ..
            } => Some(
                weights
                    .iter()
                    .zip(points)
                    .map(|(a, p)| a * u.value(grid.nearest_forecast(p)))
                    .sum::<f64>(),
            ),
            _ => None,
        };
        for r in &runs {
            let w = SimplexPoint::normalized(r.state_frequencies.clone()).map_err(runtime)?;
            let hull = convex_hull_value(u.as_ref(), &w, &grid).map_err(runtime)?;
            let ok = r.calibration_score <= 0.07 && r.sender_average >= hull - 0.05;
            hull_ok += usize::from(ok);
            if let Some(ub) = upper {
                upper_ok += usize::from(ok && r.sender_average <= ub + 0.05);
            }
        }
        let need = (runs.len() * 9).div_ceil(10);
        c.count(
            format!("{}: score <= 0.07 and payoff >= hull - 0.05", g.name),
            hull_ok,
            runs.len(),
            need,
        );
        if let Some(ub) = upper {
            c.count(
                format!("{}: also payoff <= {} + 0.05", g.name, fixed(ub)),
                upper_ok,
                runs.len(),
                need,
            );
        }
    }
    Ok(())
}

fn mdp_crosscheck(s: &Scenario, c: &mut Checks) -> Result<(), CliError> {
    for m in &s.mdp {
        let r = run_mdp(m, Overrides::default())?;
        if let Some(v) = r.persuasion_value {
            c.within(format!("{}: LP vs persuasion", m.name), r.value, v, 1e-6);
        }
        if let Some(sim) = &r.simulation {
            c.within(
                format!("{}: simulated value", m.name),
                sim.sender_average,
                r.value,
                0.05,
            );
            c.at_most(
                format!("{}: simulated score", m.name),
                sim.calibration_score,
                0.02,
            );
        }
    }
    Ok(())
}

pub fn run(id: &str) -> Result<Vec<Check>, CliError> {
    let (key, text) = SCENARIOS.iter().find(|(k, _)| *k == id).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown example id {id:?}; known: {}",
            ids().join(", ")
        ))
    })?;
    let s = Scenario::parse(text)?;
    let mut c = Checks {
        id: key,
        list: Vec::new(),
    };
    match *key {
        "table1" => table1(&s, &mut c),
        "toy-persuasion" => toy_persuasion(&s, &mut c)?,
        "financial-app" => financial_app(&s, &mut c)?,
        "regret-exploit" => regret_exploit(&s, &mut c)?,
        "uninformed-benchmarks" => uninformed(&s, &mut c)?,
        "mdp-crosscheck" => mdp_crosscheck(&s, &mut c)?,
        _ => unreachable!("every pinned id has a checker"),
    }
    Ok(c.list)
}

pub fn render(checks: &[Check]) -> String {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.id.to_string(),
                c.what.clone(),
                c.computed.clone(),
                c.band.clone(),
                if c.ok { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    table(&["id", "check", "computed", "band", "status"], &rows)
}
