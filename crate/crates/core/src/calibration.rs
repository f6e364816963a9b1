//! Calibration ledgers, scores, error schedules and contextual regret.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{PayoffSpec, Role};
use crate::simplex::{euclidean, SimplexPoint, FORECAST_TOL};

/// Periods and state tally of one announced forecast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub forecast: SimplexPoint,
    pub count: u64,
    pub tally: Vec<f64>,
}

impl LedgerEntry {
    /// `ω̄[f]`, the empirical state distribution on this forecast's periods.
    pub fn empirical(&self) -> SimplexPoint {
        SimplexPoint::normalized(self.tally.clone()).expect("non-empty entry")
    }

    /// `‖tally - count·f‖`, the unnormalized contribution to the score.
    fn deviation(&self) -> f64 {
        let c = self.count as f64;
        self.tally
            .iter()
            .zip(self.forecast.weights())
            .map(|(n, f)| (n - c * f) * (n - c * f))
            .sum::<f64>()
            .sqrt()
    }
}

/// Running record of forecasts and realized states.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationLedger {
    entries: Vec<LedgerEntry>,
    total: u64,
}

impl CalibrationLedger {
    pub fn new() -> Self {
        CalibrationLedger::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a SimplexPoint, usize)>) -> Self {
        let mut l = CalibrationLedger::new();
        for (f, w) in pairs {
            l.update(f, w);
        }
        l
    }

    /// Number of recorded periods `T`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn index_of(&self, f: &SimplexPoint) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.forecast.approx_eq(f, FORECAST_TOL))
    }

    pub fn entry(&self, f: &SimplexPoint) -> Option<&LedgerEntry> {
        self.index_of(f).map(|i| &self.entries[i])
    }

    /// Records forecast `f` followed by state `state`; returns the entry index.
    pub fn update(&mut self, f: &SimplexPoint, state: usize) -> usize {
        let i = match self.index_of(f) {
            Some(i) => i,
            None => {
                self.entries.push(LedgerEntry {
                    forecast: f.clone(),
                    count: 0,
                    tally: vec![0.0; f.dim()],
                });
                self.entries.len() - 1
            }
        };
        self.update_entry(i, state);
        i
    }

    /// Records a period for an already known entry.
    pub fn update_entry(&mut self, index: usize, state: usize) {
        let e = &mut self.entries[index];
        e.count += 1;
        e.tally[state] += 1.0;
        self.total += 1;
    }

    /// `Σ_f (|N[f]|/T) ‖ω̄[f] - f‖`; zero on an empty ledger.
    pub fn score(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.entries.iter().map(LedgerEntry::deviation).sum::<f64>() / self.total as f64
    }
}

pub fn calibration_score(ledger: &CalibrationLedger) -> f64 {
    ledger.score()
}

/// `ε_T = max(scale · T^(-exponent), floor)`, infinite during warm-up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSchedule {
    pub scale: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default)]
    pub floor: f64,
    #[serde(default)]
    pub warmup: u64,
}

fn default_exponent() -> f64 {
    0.25
}

impl ErrorSchedule {
    pub fn new(scale: f64, exponent: f64, floor: f64, warmup: u64) -> Result<Self> {
        let s = ErrorSchedule {
            scale,
            exponent,
            floor,
            warmup,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "schedule scale {} must be positive",
                self.scale
            )));
        }
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "schedule exponent {} must be nonnegative",
                self.exponent
            )));
        }
        if !(self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "schedule floor {} must be nonnegative",
                self.floor
            )));
        }
        Ok(())
    }

    /// Same margin in every period.
    pub fn constant(eps: f64) -> Result<Self> {
        ErrorSchedule::new(eps, 0.0, 0.0, 0)
    }

    pub fn epsilon(&self, t: u64) -> f64 {
        if t <= self.warmup {
            return f64::INFINITY;
        }
        (self.scale * (t as f64).powf(-self.exponent)).max(self.floor)
    }
}

impl Default for ErrorSchedule {
    fn default() -> Self {
        default_error_schedule(1.0).expect("positive scale")
    }
}

/// `ε_T = κ₀ · T^(-1/4)`.
pub fn default_error_schedule(kappa0: f64) -> Result<ErrorSchedule> {
    ErrorSchedule::new(kappa0, 0.25, 0.0, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestOutcome {
    Pass,
    Fail,
}

impl TestOutcome {
    pub fn passed(self) -> bool {
        self == TestOutcome::Pass
    }
}

/// Pass iff the ledger's score is at most `ε_T`; an empty ledger passes.
pub fn finite_test(ledger: &CalibrationLedger, schedule: &ErrorSchedule) -> TestOutcome {
    if ledger.total() == 0 || ledger.score() <= schedule.epsilon(ledger.total()) {
        TestOutcome::Pass
    } else {
        TestOutcome::Fail
    }
}

/// Weighted regret on one forecast's periods from aggregates:
/// `(count/T)·(max_a u_R(ω̄, a) - receiver_total/count)`.
pub fn regret_from_totals(
    count: u64,
    tally: &[f64],
    receiver_total: f64,
    horizon: u64,
    payoffs: &PayoffSpec,
) -> f64 {
    if count == 0 || horizon == 0 {
        return 0.0;
    }
    let c = count as f64;
    let best = (0..payoffs.n_actions())
        .map(|a| {
            tally
                .iter()
                .enumerate()
                .map(|(w, n)| n * payoffs.payoff(Role::Receiver, w, a))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    (best - receiver_total) / c * (c / horizon as f64)
}

/// Contextual regret for forecast `f` over `(f_t, ω_t, u_R,t)` records.
pub fn contextual_regret<'a>(
    records: impl IntoIterator<Item = (&'a SimplexPoint, usize, f64)>,
    payoffs: &PayoffSpec,
    f: &SimplexPoint,
) -> f64 {
    let mut tally = vec![0.0; payoffs.n_states()];
    let (mut count, mut horizon, mut total) = (0u64, 0u64, 0.0);
    for (ft, w, u) in records {
        horizon += 1;
        if ft.approx_eq(f, FORECAST_TOL) {
            count += 1;
            tally[w] += 1.0;
            total += u;
        }
    }
    regret_from_totals(count, &tally, total, horizon, payoffs)
}

/// One line of a calibration report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: usize,
    pub forecast: Vec<f64>,
    pub count: u64,
    pub empirical: Vec<f64>,
    pub distance: f64,
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub rows: Vec<ReportRow>,
    pub periods: u64,
    pub score: f64,
    pub epsilon: f64,
    pub outcome: TestOutcome,
}

impl CalibrationReport {
    pub fn new(ledger: &CalibrationLedger, schedule: &ErrorSchedule) -> Self {
        let t = ledger.total().max(1) as f64;
        let rows = ledger
            .entries()
            .iter()
            .enumerate()
            .map(|(id, e)| {
                let empirical = e.empirical();
                let distance = euclidean(empirical.weights(), e.forecast.weights());
                ReportRow {
                    id,
                    forecast: e.forecast.weights().to_vec(),
                    count: e.count,
                    contribution: e.count as f64 / t * distance,
                    empirical: empirical.into_inner(),
                    distance,
                }
            })
            .collect();
        CalibrationReport {
            rows,
            periods: ledger.total(),
            score: ledger.score(),
            epsilon: schedule.epsilon(ledger.total()),
            outcome: finite_test(ledger, schedule),
        }
    }

    /// CSV rows per forecast, then `# score`, `# epsilon` and `# outcome` lines.
    pub fn write_csv<W: Write>(&self, mut out: W, precision: usize) -> std::io::Result<()> {
        let d = self.rows.first().map_or(0, |r| r.forecast.len());
        write!(out, "forecast_id")?;
        for w in 0..d {
            write!(out, ",f_{w}")?;
        }
        write!(out, ",count")?;
        for w in 0..d {
            write!(out, ",empirical_{w}")?;
        }
        writeln!(out, ",distance,contribution")?;
        for r in &self.rows {
            write!(out, "{}", r.id)?;
            for v in &r.forecast {
                write!(out, ",{v:.precision$}")?;
            }
            write!(out, ",{}", r.count)?;
            for v in &r.empirical {
                write!(out, ",{v:.precision$}")?;
            }
            writeln!(
                out,
                ",{:.precision$},{:.precision$}",
                r.distance, r.contribution
            )?;
        }
        writeln!(out, "# score,{:.precision$}", self.score)?;
        writeln!(out, "# epsilon,{:.precision$}", self.epsilon)?;
        let outcome = if self.outcome.passed() {
            "pass"
        } else {
            "fail"
        };
        writeln!(out, "# outcome,{outcome}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::exploit_game;

    const STATES: [usize; 10] = [1, 0, 0, 0, 0, 0, 1, 1, 1, 1];
    const F1: [f64; 10] = [0.8, 0.8, 0.2, 0.2, 0.2, 0.2, 0.2, 0.8, 0.8, 0.8];
    const F2: [f64; 10] = [0.6, 0.6, 0.4, 0.4, 0.6, 0.4, 0.4, 0.6, 0.6, 0.4];
    const F3: [f64; 10] = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];

    fn ledger(row: &[f64]) -> CalibrationLedger {
        let fs: Vec<SimplexPoint> = row
            .iter()
            .map(|&q| SimplexPoint::binary(q).unwrap())
            .collect();
        CalibrationLedger::from_pairs(fs.iter().zip(STATES))
    }

    #[test]
    fn ledger_updates() {
        let mut l = CalibrationLedger::new();
        let f = SimplexPoint::binary(0.3).unwrap();
        l.update(&f, 1);
        assert_eq!(l.total(), 1);
        assert_eq!(l.entry(&f).unwrap().tally, vec![0.0, 1.0]);
        l.update(&f, 0);
        assert_eq!(l.entry(&f).unwrap().tally, vec![1.0, 1.0]);
    }

    #[test]
    fn table_one_ledgers() {
        let l = ledger(&F1);
        let hi = l.entry(&SimplexPoint::binary(0.8).unwrap()).unwrap();
        assert_eq!(hi.count, 5);
        assert_eq!(hi.tally, vec![1.0, 4.0]);
        let lo = l.entry(&SimplexPoint::binary(0.2).unwrap()).unwrap();
        assert_eq!(lo.tally, vec![4.0, 1.0]);
        assert!(l.score() < 1e-12);
    }

    #[test]
    fn table_one_scores_and_tests() {
        let eps = ErrorSchedule::constant(0.05).unwrap();
        assert_eq!(finite_test(&ledger(&F1), &eps), TestOutcome::Pass);
        assert_eq!(finite_test(&ledger(&F2), &eps), TestOutcome::Pass);
        assert_eq!(finite_test(&ledger(&F3), &eps), TestOutcome::Fail);
        let expected = 2.0 * 0.5 * (0.2f64 * 0.2 * 2.0).sqrt();
        assert!((ledger(&F3).score() - expected).abs() < 1e-12);
        assert!((ledger(&F3).score() - 0.2828).abs() < 1e-4);
    }

    #[test]
    fn degenerate_forecast_scores_zero() {
        let d = SimplexPoint::dirac(3, 1);
        let l = CalibrationLedger::from_pairs(std::iter::repeat_n((&d, 1), 20));
        assert_eq!(l.score(), 0.0);
    }

    #[test]
    fn schedules() {
        let s = default_error_schedule(1.0).unwrap();
        assert!((s.epsilon(16) - 0.5).abs() < 1e-15);
        assert!((s.epsilon(10_000) - 0.1).abs() < 1e-15);
        let warm = ErrorSchedule::new(1.0, 0.25, 0.0, 5).unwrap();
        assert_eq!(warm.epsilon(5), f64::INFINITY);
        assert_eq!(
            finite_test(
                &ledger(&F3),
                &ErrorSchedule::new(0.05, 0.0, 0.0, 10).unwrap()
            ),
            TestOutcome::Pass
        );
        assert!(default_error_schedule(0.0).is_err());
    }

    #[test]
    fn regret_examples() {
        let g = exploit_game();
        let fs: Vec<SimplexPoint> = F1
            .iter()
            .map(|&q| SimplexPoint::binary(q).unwrap())
            .collect();
        // obedient receiver on an exactly calibrated trace
        let records: Vec<(&SimplexPoint, usize, f64)> = fs
            .iter()
            .zip(STATES)
            .map(|(f, w)| (f, w, g.payoff(Role::Receiver, w, g.best_response(f))))
            .collect();
        for f in &fs[..2] {
            assert!(contextual_regret(records.iter().copied(), &g, f) <= 1e-12);
        }
        // always a4 against the 0.2 context, whose empirical law is 0.2: best is a1
        let bad: Vec<(&SimplexPoint, usize, f64)> = fs
            .iter()
            .zip(STATES)
            .map(|(f, w)| (f, w, g.payoff(Role::Receiver, w, 3)))
            .collect();
        let f = SimplexPoint::binary(0.2).unwrap();
        let r = contextual_regret(bad.iter().copied(), &g, &f);
        // count 5 of 10; best a1 averages 0.8·8 = 6.4, a4 averages 0.2·8 = 1.6
        assert!((r - 0.5 * (6.4 - 1.6)).abs() < 1e-12, "{r}");
        assert_eq!(
            contextual_regret(bad.iter().copied(), &g, &SimplexPoint::binary(0.5).unwrap()),
            0.0
        );
    }

    #[test]
    fn report_csv() {
        let rep = CalibrationReport::new(&ledger(&F3), &ErrorSchedule::constant(0.05).unwrap());
        assert_eq!(rep.outcome, TestOutcome::Fail);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf, 4).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with(
            "forecast_id,f_0,f_1,count,empirical_0,empirical_1,distance,contribution\n"
        ));
        assert!(s.contains("# score,0.2828"));
        assert!(s.ends_with("# outcome,fail\n"));
    }
}
