//! Context-aware information lapse for multi-user status updates.
//!
//! The lapse of a user is `ω(t) Q(t)²`: the squared estimation error at the
//! monitor scaled by a context weight. This crate holds the per-slot model
//! ([`model`]), the stationary-probability solver ([`waterfill`]), the five
//! scheduling policies ([`policies`]), a slotted simulator ([`simengine`]) and
//! a remote cart-pole control benchmark ([`cartpole`]).

pub mod cartpole;
pub mod dist;
pub mod error;
pub mod model;
pub mod parallel;
pub mod policies;
pub mod simengine;
pub mod waterfill;

pub use dist::{DistSpec, IncrementDist, WeightDist};
pub use error::{Error, Result};
pub use model::{ScheduleDecision, SystemParams, UserState};
pub use policies::PolicyKind;
pub use simengine::{MetricsAccumulator, ThresholdRule};
pub use waterfill::{BarSpec, StationaryPolicy};
