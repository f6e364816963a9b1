//! Sender utilities as functions of the announced forecast.

use std::fmt;
use std::sync::Arc;

use crate::game::{PayoffSpec, Role};
use crate::simplex::SimplexPoint;

/// A real-valued function on the simplex.
pub trait Utility: Send + Sync {
    fn value(&self, q: &SimplexPoint) -> f64;
}

impl<F> Utility for F
where
    F: Fn(&SimplexPoint) -> f64 + Send + Sync,
{
    fn value(&self, q: &SimplexPoint) -> f64 {
        self(q)
    }
}

/// Shared, type-erased utility.
pub type SharedUtility = Arc<dyn Utility>;

/// `û_role(f) = Σ_ω f(ω) u_role(ω, â(f))`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndirectUtility {
    payoffs: PayoffSpec,
    role: Role,
}

impl IndirectUtility {
    pub fn new(payoffs: PayoffSpec, role: Role) -> Self {
        IndirectUtility { payoffs, role }
    }

    pub fn sender(payoffs: PayoffSpec) -> Self {
        IndirectUtility::new(payoffs, Role::Sender)
    }

    pub fn payoffs(&self) -> &PayoffSpec {
        &self.payoffs
    }

    pub fn role(&self) -> Role {
        self.role
    }
}

impl Utility for IndirectUtility {
    fn value(&self, q: &SimplexPoint) -> f64 {
        self.payoffs.indirect_utility(q, self.role)
    }
}

/// 1 on a finite set of points (component-wise within `tol`), 0 elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicator {
    points: Vec<SimplexPoint>,
    tol: f64,
}

impl Indicator {
    pub fn new(points: Vec<SimplexPoint>) -> Self {
        Indicator { points, tol: 1e-9 }
    }
}

impl Utility for Indicator {
    fn value(&self, q: &SimplexPoint) -> f64 {
        if self.points.iter().any(|p| p.approx_eq(q, self.tol)) {
            1.0
        } else {
            0.0
        }
    }
}

/// Symmetric log-likelihood ratio `L(q) = (2q-1) log(q/(1-q))`.
pub fn log_likelihood_ratio(q: f64) -> f64 {
    (2.0 * q - 1.0) * (q / (1.0 - q)).ln()
}

/// `L'(q)`.
pub fn log_likelihood_ratio_slope(q: f64) -> f64 {
    2.0 * (q / (1.0 - q)).ln() + (2.0 * q - 1.0) / (q * (1.0 - q))
}

/// Forecast app utility: time spent acquiring signals up to a certainty
/// threshold plus a reputation term for precise forecasts.
///
/// Binary states; the forecast scalar is the probability of the second state.
#[derive(Clone, Copy, PartialEq)]
pub struct FinancialApp {
    pub kappa_sig: f64,
    pub kappa_rep: f64,
    pub threshold: f64,
}

impl FinancialApp {
    /// Reputation weight placing the maximum of the utility on
    /// `[1-threshold, threshold]` at `peak`.
    pub fn kappa_for_peak(kappa_sig: f64, peak: f64) -> f64 {
        -kappa_sig * log_likelihood_ratio_slope(peak) / (2.0 * (0.5 - peak))
    }

    /// `κ₁ = 1`, threshold 0.95, and the reputation weight peaking at 0.15.
    pub fn default_app() -> Self {
        FinancialApp {
            kappa_sig: 1.0,
            kappa_rep: Self::kappa_for_peak(1.0, 0.15),
            threshold: 0.95,
        }
    }

    pub fn signal_part(&self, q: f64) -> f64 {
        let lo = 1.0 - self.threshold;
        if (lo..=self.threshold).contains(&q) {
            self.kappa_sig * (log_likelihood_ratio(self.threshold) - log_likelihood_ratio(q))
        } else {
            0.0
        }
    }

    pub fn reputation_part(&self, q: f64) -> f64 {
        self.kappa_rep * (q - 0.5) * (q - 0.5)
    }

    pub fn scalar_value(&self, q: f64) -> f64 {
        self.signal_part(q) + self.reputation_part(q)
    }
}

impl fmt::Debug for FinancialApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinancialApp")
            .field("kappa_sig", &self.kappa_sig)
            .field("kappa_rep", &self.kappa_rep)
            .field("threshold", &self.threshold)
            .finish()
    }
}

impl Utility for FinancialApp {
    fn value(&self, q: &SimplexPoint) -> f64 {
        self.scalar_value(q.scalar())
    }
}
