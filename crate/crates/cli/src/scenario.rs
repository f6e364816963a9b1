//! Scenario files: TOML, `schema = 1`, unknown keys rejected.

use std::path::Path;

use calforecast::calibration::ErrorSchedule;
use calforecast::engine::{EnvironmentSpec, GameConfig, UtilitySpec};
use calforecast::persuasion::AtomicDistribution;
use calforecast::{PayoffSpec, SimplexPoint};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub replay: Vec<ReplaySpec>,
    #[serde(default)]
    pub persuasion: Vec<PersuasionSpec>,
    #[serde(default)]
    pub mdp: Vec<MdpSpec>,
    #[serde(default)]
    pub games: Vec<GameSpec>,
}

/// A fixed state sequence scored against several forecast rows.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySpec {
    pub name: String,
    pub states: Vec<usize>,
    #[serde(default = "two")]
    pub n_states: usize,
    pub schedule: ErrorSchedule,
    pub rows: Vec<ReplayRow>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayRow {
    pub name: String,
    pub forecasts: Vec<SimplexPoint>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersuasionSpec {
    pub name: String,
    /// Explicit prior; otherwise the environment's distribution of conditionals.
    #[serde(default)]
    pub prior: Option<AtomicDistribution>,
    #[serde(default)]
    pub environment: Option<EnvironmentSpec>,
    #[serde(default)]
    pub payoffs: Option<PayoffSpec>,
    #[serde(default)]
    pub utility: UtilitySpec,
    #[serde(default)]
    pub candidates: CandidateSpec,
    #[serde(default)]
    pub method: Method,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Lp,
    /// Concave envelope over a barycentric lattice of the prior's hull.
    Concavify,
}

/// Explicit `points`, or the default set at `resolution`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub points: Option<Vec<SimplexPoint>>,
}

impl Default for CandidateSpec {
    fn default() -> Self {
        CandidateSpec {
            resolution: default_resolution(),
            points: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSpec {
    pub name: String,
    /// `transitions[a][ω]`.
    #[serde(default)]
    pub transitions: Option<Vec<Vec<SimplexPoint>>>,
    /// Action-independent rows.
    #[serde(default)]
    pub chain: Option<Vec<SimplexPoint>>,
    pub payoffs: PayoffSpec,
    /// Defaults to the conditionals plus the persuasion solution's support
    /// (chain instances only).
    #[serde(default)]
    pub forecasts: Option<Vec<SimplexPoint>>,
    #[serde(default)]
    pub utility: UtilitySpec,
    #[serde(default = "mdp_resolution")]
    pub resolution: f64,
    /// Closed-loop check of the extracted policy.
    #[serde(default)]
    pub simulate: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub name: String,
    pub config: GameConfig,
    /// A count (seeds from `config.seed` on) or an explicit list.
    #[serde(default)]
    pub seeds: Option<Seeds>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl GameSpec {
    pub fn seed_list(&self) -> Option<Vec<u64>> {
        match &self.seeds {
            None => None,
            Some(Seeds::Count(n)) => Some((self.config.seed..self.config.seed + n).collect()),
            Some(Seeds::List(v)) => Some(v.clone()),
        }
    }
}

fn two() -> usize {
    2
}

fn default_resolution() -> f64 {
    0.01
}

fn mdp_resolution() -> f64 {
    0.05
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| invalid(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.replay.is_empty()
            && self.persuasion.is_empty()
            && self.mdp.is_empty()
            && self.games.is_empty()
        {
            return Err(invalid("scenario defines nothing to run"));
        }
        for r in &self.replay {
            if r.rows.is_empty() {
                return Err(invalid(format!("replay {}: no forecast rows", r.name)));
            }
            r.schedule
                .validate()
                .map_err(|e| invalid(format!("replay {}: {e}", r.name)))?;
            if let Some(w) = r.states.iter().find(|&&w| w >= r.n_states) {
                return Err(invalid(format!(
                    "replay {}: state {w} out of range",
                    r.name
                )));
            }
            for row in &r.rows {
                if row.forecasts.len() != r.states.len() {
                    return Err(invalid(format!(
                        "replay {} row {}: {} forecasts for {} states",
                        r.name,
                        row.name,
                        row.forecasts.len(),
                        r.states.len()
                    )));
                }
                if row.forecasts.iter().any(|f| f.dim() != r.n_states) {
                    return Err(invalid(format!(
                        "replay {} row {}: forecast dimension",
                        r.name, row.name
                    )));
                }
            }
        }
        for p in &self.persuasion {
            if p.prior.is_some() == p.environment.is_some() {
                return Err(invalid(format!(
                    "persuasion {}: give exactly one of prior, environment",
                    p.name
                )));
            }
            if matches!(p.candidates.points.as_deref(), Some([])) {
                return Err(invalid(format!(
                    "persuasion {}: empty candidate grid",
                    p.name
                )));
            }
            if !(p.candidates.resolution > 0.0 && p.candidates.resolution <= 1.0) {
                return Err(invalid(format!(
                    "persuasion {}: resolution must lie in (0, 1]",
                    p.name
                )));
            }
            if matches!(p.utility, UtilitySpec::Indirect) && p.payoffs.is_none() {
                return Err(invalid(format!(
                    "persuasion {}: indirect utility needs payoffs",
                    p.name
                )));
            }
        }
        for m in &self.mdp {
            if m.transitions.is_some() == m.chain.is_some() {
                return Err(invalid(format!(
                    "mdp {}: give exactly one of transitions, chain",
                    m.name
                )));
            }
            if m.transitions.is_some() && m.forecasts.is_none() {
                return Err(invalid(format!(
                    "mdp {}: forecasts required with per-action transitions",
                    m.name
                )));
            }
            if matches!(m.forecasts.as_deref(), Some([])) {
                return Err(invalid(format!("mdp {}: empty forecast set", m.name)));
            }
        }
        for g in &self.games {
            g.config
                .validate()
                .map_err(|e| invalid(format!("game {}: {e}", g.name)))?;
            if matches!(g.seeds, Some(Seeds::Count(0)))
                || matches!(&g.seeds, Some(Seeds::List(v)) if v.is_empty())
            {
                return Err(invalid(format!("game {}: no seeds", g.name)));
            }
        }
        Ok(())
    }
}
