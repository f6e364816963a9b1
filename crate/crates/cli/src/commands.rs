//! `solve`, `simulate` and `report`, plus the runners `reproduce` reuses.

use std::path::Path;

use calforecast::calibration::{CalibrationLedger, CalibrationReport, TestOutcome};
use calforecast::engine::{run_game, sweep, GameConfig, GameSummary, GameTrace, SweepTable};
use calforecast::mdp::{
    extract_policy, simulate_policy, solve_feasible_lp, JointInvariant, MdpModel, MdpTrace,
    MemoryOnePolicy,
};
use calforecast::persuasion::{
    concavify_restricted, default_candidates, solve_persuasion, AtomicDistribution, SignalingPolicy,
};
use calforecast::processes::MarkovChain;
use calforecast::simplex::FORECAST_TOL;
use calforecast::SimplexPoint;
use serde::Serialize;

use crate::output::{self, fixed, point, table, Format, OutDir, PRECISION};
use crate::scenario::{GameSpec, MdpSpec, Method, PersuasionSpec, ReplaySpec, Scenario};
use crate::CliError;

/// Command-line overrides applied to every entry of a scenario.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub metrics_every: Option<u64>,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

// ---- replay

#[derive(Clone, Debug, Serialize)]
pub struct ReplayRowResult {
    pub name: String,
    pub report: CalibrationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayResult {
    pub name: String,
    pub rows: Vec<ReplayRowResult>,
}

pub fn run_replay(spec: &ReplaySpec) -> ReplayResult {
    let rows = spec
        .rows
        .iter()
        .map(|row| {
            let ledger = CalibrationLedger::from_pairs(
                row.forecasts.iter().zip(spec.states.iter().copied()),
            );
            ReplayRowResult {
                name: row.name.clone(),
                report: CalibrationReport::new(&ledger, &spec.schedule),
            }
        })
        .collect();
    ReplayResult {
        name: spec.name.clone(),
        rows,
    }
}

fn outcome(o: TestOutcome) -> &'static str {
    if o.passed() {
        "pass"
    } else {
        "fail"
    }
}

fn render_replay(r: &ReplayResult) -> String {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|x| {
            vec![
                x.name.clone(),
                x.report.periods.to_string(),
                fixed(x.report.score),
                fixed(x.report.epsilon),
                outcome(x.report.outcome).into(),
            ]
        })
        .collect();
    format!(
        "replay {}\n{}",
        r.name,
        table(&["row", "periods", "score", "epsilon", "test"], &rows)
    )
}

// ---- persuasion

#[derive(Clone, Debug, Serialize)]
pub struct PersuasionResult {
    pub name: String,
    pub method: String,
    pub prior: AtomicDistribution,
    pub candidates: usize,
    pub value: f64,
    pub q_star: AtomicDistribution,
    pub policy: SignalingPolicy,
}

pub fn persuasion_prior(spec: &PersuasionSpec) -> Result<AtomicDistribution, CliError> {
    match (&spec.prior, &spec.environment) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(env)) => {
            let model = env.process().map_err(runtime)?.ok_or_else(|| {
                CliError::Invalid(format!(
                    "persuasion {}: environment has no fixed law",
                    spec.name
                ))
            })?;
            model.distribution_of_conditionals().map_err(runtime)
        }
        (None, None) => Err(CliError::Invalid(format!(
            "persuasion {}: no prior",
            spec.name
        ))),
    }
}

pub fn run_persuasion(spec: &PersuasionSpec) -> Result<PersuasionResult, CliError> {
    let prior = persuasion_prior(spec)?;
    let u = spec
        .utility
        .build_with(spec.payoffs.as_ref())
        .map_err(runtime)?;
    let (method, candidates, sol) = match spec.method {
        Method::Lp => {
            let cands = match &spec.candidates.points {
                Some(points) => points.clone(),
                None => {
                    default_candidates(&prior, spec.payoffs.as_ref(), spec.candidates.resolution)
                        .map_err(runtime)?
                }
            };
            let sol = solve_persuasion(&prior, u.as_ref(), &cands).map_err(runtime)?;
            ("lp", cands.len(), sol)
        }
        Method::Concavify => {
            let sol = concavify_restricted(&prior, u.as_ref(), spec.candidates.resolution)
                .map_err(runtime)?;
            ("concavify", 0, sol)
        }
    };
    Ok(PersuasionResult {
        name: spec.name.clone(),
        method: method.into(),
        prior,
        candidates,
        value: sol.value,
        q_star: sol.q_star,
        policy: sol.policy,
    })
}

fn render_persuasion(r: &PersuasionResult) -> String {
    let mut out = format!(
        "persuasion {} ({}, {} candidates)\nvalue {}\n",
        r.name,
        r.method,
        r.candidates,
        fixed(r.value)
    );
    let q: Vec<Vec<String>> = r
        .q_star
        .atoms()
        .map(|(m, p)| vec![point(p.weights()), fixed(m)])
        .collect();
    out.push_str(&table(&["forecast", "mass"], &q));
    let mut header = vec!["conditional".to_string()];
    header.extend(
        r.policy
            .forecasts()
            .iter()
            .map(|f| format!("pi({})", point(f.weights()))),
    );
    let rows: Vec<Vec<String>> = r
        .policy
        .conditionals()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![point(p.weights())];
            row.extend(r.policy.probabilities().row(i).iter().map(|x| fixed(*x)));
            row
        })
        .collect();
    out.push_str(&table(
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        &rows,
    ));
    out
}

// ---- mdp

#[derive(Clone, Debug, Serialize)]
pub struct MdpResult {
    pub name: String,
    pub forecasts: Vec<SimplexPoint>,
    pub actions: Vec<usize>,
    pub value: f64,
    /// Static persuasion value for chain instances.
    pub persuasion_value: Option<f64>,
    pub eta: JointInvariant,
    pub policy: MemoryOnePolicy,
    pub simulation: Option<MdpTrace>,
}

pub fn run_mdp(spec: &MdpSpec, ov: Overrides) -> Result<MdpResult, CliError> {
    let u = spec
        .utility
        .build_with(Some(&spec.payoffs))
        .map_err(runtime)?;
    let (model, persuasion_value) = match (&spec.transitions, &spec.chain) {
        (Some(t), _) => {
            let forecasts = spec.forecasts.clone().unwrap_or_default();
            (
                MdpModel::new(t.clone(), spec.payoffs.clone(), forecasts).map_err(runtime)?,
                None,
            )
        }
        (None, Some(rows)) => {
            let n = rows.len();
            let chain =
                MarkovChain::new(rows.clone(), SimplexPoint::uniform(n.max(1))).map_err(runtime)?;
            let prior = chain.distribution_of_conditionals().map_err(runtime)?;
            let cands = default_candidates(&prior, Some(&spec.payoffs), spec.resolution)
                .map_err(runtime)?;
            let per = solve_persuasion(&prior, u.as_ref(), &cands).map_err(runtime)?;
            let forecasts = match &spec.forecasts {
                Some(f) => f.clone(),
                None => {
                    let mut f = prior.points().to_vec();
                    for q in per.q_star.points() {
                        if !f.iter().any(|x| x.approx_eq(q, FORECAST_TOL)) {
                            f.push(q.clone());
                        }
                    }
                    f
                }
            };
            let model = MdpModel::action_independent(rows.clone(), spec.payoffs.clone(), forecasts)
                .map_err(runtime)?;
            (model, Some(per.value))
        }
        (None, None) => {
            return Err(CliError::Invalid(format!(
                "mdp {}: no transitions",
                spec.name
            )))
        }
    };
    let sol = solve_feasible_lp(&model, u.as_ref()).map_err(runtime)?;
    let policy = extract_policy(&sol.eta);
    let horizon = spec.simulate.map(|h| ov.horizon.unwrap_or(h));
    let simulation = match horizon {
        Some(h) => Some(
            simulate_policy(
                &model,
                &policy,
                u.as_ref(),
                Some(&sol.eta),
                h,
                ov.seed.unwrap_or(spec.seed),
            )
            .map_err(runtime)?,
        ),
        None => None,
    };
    Ok(MdpResult {
        name: spec.name.clone(),
        forecasts: model.forecasts().to_vec(),
        actions: (0..model.forecasts().len())
            .map(|f| model.action(f))
            .collect(),
        value: sol.value,
        persuasion_value,
        eta: sol.eta,
        policy,
        simulation,
    })
}

fn render_mdp(r: &MdpResult) -> String {
    let mut out = format!("mdp {}\nvalue {}\n", r.name, fixed(r.value));
    if let Some(v) = r.persuasion_value {
        out.push_str(&format!("static persuasion value {}\n", fixed(v)));
    }
    let d = r.eta.n_states();
    let rows: Vec<Vec<String>> = r
        .forecasts
        .iter()
        .enumerate()
        .map(|(f, p)| {
            vec![
                point(p.weights()),
                r.actions[f].to_string(),
                fixed(r.eta.marginal(f)),
            ]
        })
        .collect();
    out.push_str(&table(&["forecast", "action", "eta"], &rows));
    let mut header = vec!["prev forecast".to_string(), "prev state".to_string()];
    header.extend(
        r.forecasts
            .iter()
            .map(|f| format!("sigma({})", point(f.weights()))),
    );
    let mut rows = Vec::new();
    for pf in 0..r.forecasts.len() {
        for ps in 0..d {
            let mut row = vec![point(r.forecasts[pf].weights()), ps.to_string()];
            row.extend(r.policy.row(pf, ps).iter().map(|x| fixed(*x)));
            rows.push(row);
        }
    }
    out.push_str(&table(
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        &rows,
    ));
    if let Some(s) = &r.simulation {
        out.push_str(&format!(
            "simulated T={}: utility average {}, table average {}, score {}, max joint error {}\n",
            s.horizon,
            fixed(s.utility_average),
            fixed(s.sender_average),
            fixed(s.calibration_score),
            fixed(s.max_joint_error(&r.eta)),
        ));
        for w in &s.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
    }
    out
}

// ---- games

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum GameResult {
    Single(Box<GameTrace>),
    Sweep(SweepTable),
}

pub fn game_config(spec: &GameSpec, ov: Overrides) -> GameConfig {
    let mut c = spec.config.clone();
    if c.name.is_empty() {
        c.name = spec.name.clone();
    }
    if let Some(s) = ov.seed {
        c.seed = s;
    }
    if let Some(h) = ov.horizon {
        c.horizon = h;
    }
    if ov.metrics_every.is_some() {
        c.metrics_every = ov.metrics_every;
    }
    c
}

pub fn run_games(spec: &GameSpec, ov: Overrides) -> Result<GameResult, CliError> {
    let config = game_config(spec, ov);
    config
        .validate()
        .map_err(|e| CliError::Invalid(format!("game {}: {e}", spec.name)))?;
    let seeds = spec.seed_list().map(|v| match ov.seed {
        // shift the whole list so that it starts at the override
        Some(s) => v.iter().map(|x| x - v[0] + s).collect(),
        None => v,
    });
    match seeds {
        None => Ok(GameResult::Single(Box::new(
            run_game(&config).map_err(runtime)?,
        ))),
        Some(seeds) => {
            let table = sweep(std::slice::from_ref(&config), &seeds);
            if let Some(f) = table.failures.first() {
                return Err(CliError::Runtime(format!(
                    "game {} seed {}: {}",
                    spec.name, f.seed, f.error
                )));
            }
            Ok(GameResult::Sweep(table))
        }
    }
}

fn summary_rows(s: &GameSummary) -> Vec<Vec<String>> {
    let mut rows = vec![
        vec!["horizon".into(), s.horizon.to_string()],
        vec!["sender average".into(), fixed(s.sender_average)],
        vec!["receiver average".into(), fixed(s.receiver_average)],
        vec!["calibration score".into(), fixed(s.calibration_score)],
        vec!["terminal epsilon".into(), fixed(s.terminal_epsilon)],
        vec!["terminal test".into(), outcome(s.terminal_outcome).into()],
        vec!["failures".into(), s.failures.to_string()],
        vec![
            "last failure".into(),
            s.last_failure.map_or("-".into(), |t| t.to_string()),
        ],
        vec!["max regret".into(), fixed(s.max_regret())],
    ];
    rows.push(vec![
        "state frequencies".into(),
        output::vector(&s.state_frequencies),
    ]);
    rows
}

pub fn render_summary(title: &str, s: &GameSummary) -> String {
    let mut out = format!("game {title}\n");
    out.push_str(&table(&["metric", "value"], &summary_rows(s)));
    let rows: Vec<Vec<String>> = s
        .forecasts
        .iter()
        .map(|f| {
            vec![
                point(&f.forecast),
                f.count.to_string(),
                point(&f.empirical),
                fixed(f.contribution),
                fixed(f.regret),
            ]
        })
        .collect();
    out.push_str(&table(
        &["forecast", "count", "empirical", "contribution", "regret"],
        &rows,
    ));
    out
}

fn render_sweep(title: &str, t: &SweepTable) -> String {
    let rows: Vec<Vec<String>> = t
        .runs
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                fixed(r.summary.sender_average),
                fixed(r.summary.receiver_average),
                fixed(r.summary.calibration_score),
                r.summary.failures.to_string(),
            ]
        })
        .collect();
    let mut out = format!("sweep {title}\n");
    out.push_str(&table(
        &["seed", "sender", "receiver", "score", "failures"],
        &rows,
    ));
    for r in &t.rows {
        out.push_str(&format!(
            "mean over {} runs: sender {} (sd {}), receiver {} (sd {}), score {} (sd {})\n",
            r.runs,
            fixed(r.sender_mean),
            fixed(r.sender_std),
            fixed(r.receiver_mean),
            fixed(r.receiver_std),
            fixed(r.score_mean),
            fixed(r.score_std)
        ));
    }
    out
}

pub fn render_game(name: &str, r: &GameResult) -> String {
    match r {
        GameResult::Single(t) => render_summary(name, &t.summary),
        GameResult::Sweep(t) => render_sweep(name, t),
    }
}

fn write_summary_csv(out: &mut Vec<u8>, s: &GameSummary) -> std::io::Result<()> {
    use std::io::Write;
    let p = PRECISION;
    writeln!(out, "horizon,sender_average,receiver_average,calibration_score,terminal_epsilon,terminal_test,failures,last_failure")?;
    writeln!(
        out,
        "{},{:.p$},{:.p$},{:.p$},{:.p$},{},{},{}",
        s.horizon,
        s.sender_average,
        s.receiver_average,
        s.calibration_score,
        s.terminal_epsilon,
        outcome(s.terminal_outcome),
        s.failures,
        s.last_failure.map_or(String::new(), |t| t.to_string())
    )
}

fn write_forecasts_csv(out: &mut Vec<u8>, s: &GameSummary) -> std::io::Result<()> {
    use std::io::Write;
    let p = PRECISION;
    let d = s.state_frequencies.len();
    let cols: Vec<String> = (0..d)
        .map(|w| format!("f_{w}"))
        .chain((0..d).map(|w| format!("empirical_{w}")))
        .collect();
    writeln!(out, "{},count,contribution,regret", cols.join(","))?;
    for f in &s.forecasts {
        let vals: Vec<String> = f
            .forecast
            .iter()
            .chain(&f.empirical)
            .map(|x| format!("{x:.p$}"))
            .collect();
        writeln!(
            out,
            "{},{},{:.p$},{:.p$}",
            vals.join(","),
            f.count,
            f.contribution,
            f.regret
        )?;
    }
    Ok(())
}

fn write_runs_csv(out: &mut Vec<u8>, t: &SweepTable) -> std::io::Result<()> {
    use std::io::Write;
    let p = PRECISION;
    writeln!(
        out,
        "seed,sender_average,receiver_average,calibration_score,failures"
    )?;
    for r in &t.runs {
        let s = &r.summary;
        writeln!(
            out,
            "{},{:.p$},{:.p$},{:.p$},{}",
            r.seed, s.sender_average, s.receiver_average, s.calibration_score, s.failures
        )?;
    }
    Ok(())
}

fn write_game(
    dir: &OutDir,
    stem: &str,
    r: &GameResult,
    format: Format,
) -> Result<Vec<std::path::PathBuf>, CliError> {
    let mut files = Vec::new();
    match (r, format) {
        (GameResult::Single(t), Format::Json) => {
            files.push(dir.write(&format!("{stem}-trace.json"), output::json(t)?.as_bytes())?);
        }
        (GameResult::Single(t), Format::Csv) => {
            files.push(dir.write_with(&format!("{stem}-summary.csv"), |o| {
                write_summary_csv(o, &t.summary)
            })?);
            files.push(dir.write_with(&format!("{stem}-forecasts.csv"), |o| {
                write_forecasts_csv(o, &t.summary)
            })?);
            if !t.periods.is_empty() {
                files.push(dir.write_with(&format!("{stem}-periods.csv"), |o| {
                    t.write_periods_csv(o, PRECISION)
                })?);
            }
            if !t.checkpoints.is_empty() {
                files.push(dir.write_with(&format!("{stem}-checkpoints.csv"), |o| {
                    t.write_checkpoints_csv(o, PRECISION)
                })?);
            }
        }
        (GameResult::Sweep(t), Format::Json) => {
            files.push(dir.write(&format!("{stem}-sweep.json"), output::json(t)?.as_bytes())?);
        }
        (GameResult::Sweep(t), Format::Csv) => {
            files
                .push(dir.write_with(&format!("{stem}-sweep.csv"), |o| t.write_csv(o, PRECISION))?);
            files.push(dir.write_with(&format!("{stem}-runs.csv"), |o| write_runs_csv(o, t))?);
        }
    }
    Ok(files)
}

fn write_replay(
    dir: &OutDir,
    stem: &str,
    r: &ReplayResult,
    format: Format,
) -> Result<Vec<std::path::PathBuf>, CliError> {
    match format {
        Format::Json => {
            Ok(vec![dir.write(
                &format!("{stem}-replay.json"),
                output::json(r)?.as_bytes(),
            )?])
        }
        Format::Csv => {
            let mut files = vec![dir.write_with(&format!("{stem}-replay.csv"), |o| {
                use std::io::Write;
                writeln!(o, "row,periods,score,epsilon,test")?;
                for x in &r.rows {
                    writeln!(
                        o,
                        "{},{},{},{},{}",
                        x.name,
                        x.report.periods,
                        fixed(x.report.score),
                        fixed(x.report.epsilon),
                        outcome(x.report.outcome)
                    )?;
                }
                Ok(())
            })?];
            for x in &r.rows {
                let name = format!("{stem}-{}-report.csv", output::slug(&x.name));
                files.push(dir.write_with(&name, |o| x.report.write_csv(o, PRECISION))?);
            }
            Ok(files)
        }
    }
}

// ---- subcommands

#[derive(Serialize)]
struct Solution<'a> {
    scenario: &'a str,
    persuasion: Vec<PersuasionResult>,
    mdp: Vec<MdpResult>,
}

pub fn solve(s: &Scenario, ov: Overrides, out: &Path) -> Result<String, CliError> {
    if s.persuasion.is_empty() && s.mdp.is_empty() {
        return Err(CliError::Invalid(format!(
            "scenario {} has no persuasion or mdp instance",
            s.name
        )));
    }
    let persuasion = s
        .persuasion
        .iter()
        .map(run_persuasion)
        .collect::<Result<Vec<_>, _>>()?;
    let mdp = s
        .mdp
        .iter()
        .map(|m| run_mdp(m, ov))
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = String::new();
    for p in &persuasion {
        text.push_str(&render_persuasion(p));
        text.push('\n');
    }
    for m in &mdp {
        text.push_str(&render_mdp(m));
        text.push('\n');
    }
    let dir = OutDir::create(out)?;
    let file = dir.write(
        &format!("{}-solution.json", output::slug(&s.name)),
        output::json(&Solution {
            scenario: &s.name,
            persuasion,
            mdp,
        })?
        .as_bytes(),
    )?;
    text.push_str(&format!("wrote {}\n", file.display()));
    Ok(text)
}

pub fn simulate(
    s: &Scenario,
    ov: Overrides,
    out: &Path,
    format: Format,
) -> Result<String, CliError> {
    if s.replay.is_empty() && s.games.is_empty() {
        return Err(CliError::Invalid(format!(
            "scenario {} has no replay or game",
            s.name
        )));
    }
    let dir = OutDir::create(out)?;
    let base = output::slug(&s.name);
    let mut text = String::new();
    let mut files = Vec::new();
    for r in &s.replay {
        let res = run_replay(r);
        text.push_str(&render_replay(&res));
        text.push('\n');
        files.extend(write_replay(
            &dir,
            &format!("{base}-{}", output::slug(&r.name)),
            &res,
            format,
        )?);
    }
    for g in &s.games {
        let res = run_games(g, ov)?;
        text.push_str(&render_game(&g.name, &res));
        text.push('\n');
        files.extend(write_game(
            &dir,
            &format!("{base}-{}", output::slug(&g.name)),
            &res,
            format,
        )?);
    }
    for f in files {
        text.push_str(&format!("wrote {}\n", f.display()));
    }
    Ok(text)
}

/// Summarizes a written trace, summary or sweep JSON file, or runs a
/// scenario and prints its reports without writing anything.
pub fn report(path: &Path, ov: Overrides) -> Result<String, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let title = path
            .file_stem()
            .map_or("trace".into(), |s| s.to_string_lossy().into_owned());
        if let Ok(t) = serde_json::from_str::<GameTrace>(&text) {
            let mut out = render_summary(&title, &t.summary);
            if !t.checkpoints.is_empty() {
                out.push_str(&checkpoint_table(&t));
            }
            return Ok(out);
        }
        if let Ok(t) = serde_json::from_str::<SweepTable>(&text) {
            return Ok(render_sweep(&title, &t));
        }
        if let Ok(s) = serde_json::from_str::<GameSummary>(&text) {
            return Ok(render_summary(&title, &s));
        }
        return Err(CliError::Invalid(format!(
            "{}: not a trace, summary or sweep",
            path.display()
        )));
    }
    let s = Scenario::load(path)?;
    let mut out = String::new();
    for r in &s.replay {
        let res = run_replay(r);
        out.push_str(&render_replay(&res));
        for x in &res.rows {
            out.push_str(&format!("row {}\n", x.name));
            let rows: Vec<Vec<String>> = x
                .report
                .rows
                .iter()
                .map(|e| {
                    vec![
                        point(&e.forecast),
                        e.count.to_string(),
                        point(&e.empirical),
                        fixed(e.distance),
                        fixed(e.contribution),
                    ]
                })
                .collect();
            out.push_str(&table(
                &["forecast", "count", "empirical", "distance", "contribution"],
                &rows,
            ));
        }
        out.push('\n');
    }
    for g in &s.games {
        match run_games(g, ov)? {
            GameResult::Single(t) => {
                out.push_str(&render_summary(&g.name, &t.summary));
                if !t.checkpoints.is_empty() {
                    out.push_str(&checkpoint_table(&t));
                }
            }
            r @ GameResult::Sweep(_) => out.push_str(&render_game(&g.name, &r)),
        }
        out.push('\n');
    }
    for p in &s.persuasion {
        out.push_str(&render_persuasion(&run_persuasion(p)?));
        out.push('\n');
    }
    for m in &s.mdp {
        out.push_str(&render_mdp(&run_mdp(m, ov)?));
        out.push('\n');
    }
    Ok(out)
}

fn checkpoint_table(t: &GameTrace) -> String {
    let rows: Vec<Vec<String>> = t
        .checkpoints
        .iter()
        .map(|c| {
            vec![
                c.t.to_string(),
                fixed(c.score),
                fixed(c.epsilon),
                fixed(c.sender_average),
                fixed(c.receiver_average),
                c.failures.to_string(),
            ]
        })
        .collect();
    table(
        &["t", "score", "epsilon", "sender", "receiver", "failures"],
        &rows,
    )
}
