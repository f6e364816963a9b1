//! Senders, receivers and nature strategies.

pub mod approach;
pub mod grid;
pub mod nature;
pub mod receivers;
pub mod senders;

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::simplex::SimplexPoint;

pub use approach::{ApproachabilityState, ApproachableSender, OpportunisticSender};
pub use grid::{nearest_grid_forecast, ForecastGrid};
pub use nature::{BlockAdversary, Nature, ProcessNature};
pub use receivers::{
    CalibrationReceiver, ContextualLearnerState, FaceValueReceiver, MeanBasedReceiver,
    NoRegretReceiver, Receiver, Response,
};
pub use senders::{HonestSender, OptimalSender, PhasedSender, ScriptedSender, Sender};

pub type AgentRng = ChaCha8Rng;

/// What a sender sees before announcing period `t`'s forecast.
#[derive(Clone, Copy, Debug)]
pub struct SenderView<'a> {
    /// 1-based period.
    pub t: u64,
    /// True conditional law of this period's state; uninformed senders ignore it.
    pub conditional: &'a SimplexPoint,
}

/// What a receiver sees before acting in period `t`.
#[derive(Clone, Copy, Debug)]
pub struct ReceiverView<'a> {
    pub t: u64,
    pub forecast: &'a SimplexPoint,
    /// Dense id of the announced forecast, in order of first appearance.
    pub context: usize,
}

pub(crate) fn not_empty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(crate::Error::InvalidParameter(format!(
            "{what} must not be empty"
        )));
    }
    Ok(())
}
