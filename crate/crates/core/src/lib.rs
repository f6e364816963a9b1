//! Calibrated strategic forecasting.
//!
//! A sender announces probabilistic forecasts of a state; a receiver acts on
//! them only while they pass a calibration test. The crate provides the stage
//! game, stochastic environments, calibration ledgers, the persuasion LP over
//! mean-preserving contractions, sender and receiver strategies, a seeded
//! game engine, and an average-reward MDP extension.

pub mod agents;
pub mod calibration;
pub mod engine;
pub mod error;
pub mod game;
pub mod lp;
pub mod mdp;
pub mod persuasion;
pub mod processes;
pub mod random;
pub mod simplex;
pub mod utility;

pub use error::{Error, Result};
pub use game::{PayoffSpec, Role};
pub use simplex::{SimplexPoint, StateSpace};
pub use utility::{IndirectUtility, Utility};
