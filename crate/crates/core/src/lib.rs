//! Deterministic guidance and simulation for inserting a fixed-wing UAV from a
//! main traffic lane into a rotating-slot loiter circle.
//!
//! - [`geometry`] — corridor design quantities: loiter radius, lane separation,
//!   transit distance, and the arrival-time feasibility window.
//! - [`slots`] — the ring of N equiangular rotating slots, occupancy, and
//!   per-slot arrival timing at the insertion point.
//! - [`planner`] — desired-slot selection with minimal hop chains, per-slot
//!   speed schedules, and an exhaustive reference planner for tests.
//! - [`sim`] — kinematic flight simulation along the corridor path with event
//!   and separation tracking.
//! - [`scenario`] — TOML-backed description of one simulation run.
//! - [`sweep`] — seeded batch randomization over occupancy and ring phase.

pub mod geometry;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod slots;
pub mod sweep;

pub use geometry::{CorridorConfig, FeasibilityWindow};
pub use planner::{InsertionPlan, SpeedCommand};
pub use scenario::ScenarioConfig;
pub use sim::{SimulationTrace, UavState};
pub use slots::{SlotRing, SlotTiming};
