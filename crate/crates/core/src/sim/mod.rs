//! Kinematic simulation of all vehicles along the corridor path.
//!
//! The model is the planar fixed-wing kinematic triple `ẋ = v cos θ`,
//! `ẏ = v sin θ`, `θ̇ = a/v`, with speed `v` and lateral acceleration `a`
//! piecewise constant between guidance updates. Guidance is open-loop
//! curvature feedforward (`a = v²/R` per path segment); there are no
//! disturbances, so vehicles hold the nominal path to integrator error and a
//! cross-track monitor flags anything larger as a bug.

mod run;

pub use run::{
    measure_separation, run_scenario, RunMetrics, SimEvent, SimulationTrace, VehicleTrace,
};

use crate::geometry::{CorridorConfig, DesignViolation};
use crate::planner::PlanError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest tolerated distance between a vehicle and its nominal path element.
/// Violations indicate an integrator or geometry bug, never a modeled effect.
pub const CROSS_TRACK_TOLERANCE: f64 = 0.1;

/// Which path element the vehicle is currently flying. The incoming UAV walks
/// the variants strictly in declaration order, each exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    MainLane,
    TransitLink,
    TransitLane,
    LoiterCircle,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Phase::MainLane => "MainLane",
            Phase::TransitLink => "TransitLink",
            Phase::TransitLane => "TransitLane",
            Phase::LoiterCircle => "LoiterCircle",
        };
        f.write_str(name)
    }
}

/// Kinematic state of one vehicle plus its current commands.
///
/// `v` and `a` are the commanded speed and lateral acceleration in force over
/// the step that produced this state. `arclength` is distance flown within
/// the current phase; it resets to zero at each phase transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub a: f64,
    pub phase: Phase,
    pub arclength: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("design validation failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidDesign(Vec<DesignViolation>),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("speed must be positive to step the model (got {0} m/s)")]
    NonPositiveSpeed(f64),
    #[error("cross-track deviation {deviation} m exceeds {tolerance} m{context}")]
    CrossTrack {
        deviation: f64,
        tolerance: f64,
        context: String,
    },
    #[error(
        "safety violation at t = {t} s: vehicles {a} and {b} are {distance} m apart, below {d_safe} m"
    )]
    SafetyViolation {
        t: f64,
        a: u32,
        b: u32,
        distance: f64,
        d_safe: f64,
    },
    #[error("bad scenario: {0}")]
    BadScenario(String),
}

/// Advances one vehicle by `dt` with classic fourth-order Runge–Kutta, holding
/// `v` and `a` constant over the step. `dt = 0` returns the state unchanged.
///
/// With constant commands the heading rate is constant, so the heading stages
/// are sampled exactly and the dominant error is the position quadrature,
/// fifth order per step.
pub fn step_kinematics(state: UavState, dt: f64) -> Result<UavState, SimError> {
    if state.v <= 0.0 || state.v.is_nan() {
        return Err(SimError::NonPositiveSpeed(state.v));
    }
    let v = state.v;
    let theta_dot = state.a / v;
    // x and y do not feed back into any derivative, so each stage only needs
    // the heading sample at its stage time.
    let deriv = |theta: f64| [v * theta.cos(), v * theta.sin(), theta_dot];
    let k1 = deriv(state.theta);
    let k2 = deriv(state.theta + 0.5 * dt * k1[2]);
    let k3 = deriv(state.theta + 0.5 * dt * k2[2]);
    let k4 = deriv(state.theta + dt * k3[2]);
    let mut next = state;
    next.x += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    next.y += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    next.theta += dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
    Ok(next)
}

/// World-frame layout of the corridor path.
///
/// The main lane runs along +x through the origin; the incoming UAV exits it
/// at `(entry_x, 0)`, turns left through a quarter circle of radius
/// `r_transit`, flies the straight transit lane north for
/// `d_lane + r_loiter`, and meets the loiter circle tangentially at the
/// insertion point. Slot angles are measured at the loiter center from the
/// insertion-point direction, increasing counterclockwise (the travel
/// direction), so a slot at angle γ sits at `center + r_loiter·(cos γ, sin γ)`
/// heading `γ + π/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    entry_x: f64,
    r_transit: f64,
    r_loiter: f64,
    link_len: f64,
    lane_len: f64,
    link_center: (f64, f64),
    lane_x: f64,
    loiter_center: (f64, f64),
    insertion_point: (f64, f64),
}

impl PathGeometry {
    /// Lays out the path for a lane exit at `(entry_x, 0)`.
    pub fn new(config: &CorridorConfig, entry_x: f64) -> Self {
        let r_t = config.r_transit;
        let r_l = config.r_loiter;
        let lane_len = config.d_lane + r_l;
        let lane_x = entry_x + r_t;
        let insertion_point = (lane_x, r_t + lane_len);
        let loiter_center = (lane_x - r_l, r_t + lane_len);
        PathGeometry {
            entry_x,
            r_transit: r_t,
            r_loiter: r_l,
            link_len: PI * r_t / 2.0,
            lane_len,
            link_center: (entry_x, r_t),
            lane_x,
            loiter_center,
            insertion_point,
        }
    }

    pub fn entry_point(&self) -> (f64, f64) {
        (self.entry_x, 0.0)
    }

    pub fn insertion_point(&self) -> (f64, f64) {
        self.insertion_point
    }

    pub fn loiter_center(&self) -> (f64, f64) {
        self.loiter_center
    }

    /// Length of one phase's path element. The main lane's run-in length is
    /// scenario data (not corridor geometry) and the loiter circle never
    /// ends, so both report infinity; their exits are commanded by the run
    /// loop, not by arclength.
    pub fn phase_length(&self, phase: Phase) -> f64 {
        match phase {
            Phase::MainLane | Phase::LoiterCircle => f64::INFINITY,
            Phase::TransitLink => self.link_len,
            Phase::TransitLane => self.lane_len,
        }
    }

    /// Curvature feedforward for a phase at commanded speed: zero on the
    /// straights, `v²/R` (left turn) on the arcs.
    pub fn accel(&self, phase: Phase, v_cmd: f64) -> f64 {
        match phase {
            Phase::MainLane | Phase::TransitLane => 0.0,
            Phase::TransitLink => v_cmd * v_cmd / self.r_transit,
            Phase::LoiterCircle => v_cmd * v_cmd / self.r_loiter,
        }
    }

    /// World position of a slot (or any point) at angle `gamma` on the loiter
    /// circle.
    pub fn slot_position(&self, gamma: f64) -> (f64, f64) {
        (
            self.loiter_center.0 + self.r_loiter * gamma.cos(),
            self.loiter_center.1 + self.r_loiter * gamma.sin(),
        )
    }

    /// State of a vehicle riding the loiter circle at angle `gamma` and speed
    /// `v`, with per-phase arclength starting at zero.
    pub fn loiter_state(&self, gamma: f64, v: f64) -> UavState {
        let (x, y) = self.slot_position(gamma);
        UavState {
            x,
            y,
            theta: gamma + PI / 2.0,
            v,
            a: v * v / self.r_loiter,
            phase: Phase::LoiterCircle,
            arclength: 0.0,
        }
    }

    /// Distance from the vehicle to its nominal path element.
    pub fn cross_track(&self, state: &UavState) -> f64 {
        match state.phase {
            Phase::MainLane => state.y.abs(),
            Phase::TransitLink => {
                let dx = state.x - self.link_center.0;
                let dy = state.y - self.link_center.1;
                (dx.hypot(dy) - self.r_transit).abs()
            }
            Phase::TransitLane => (state.x - self.lane_x).abs(),
            Phase::LoiterCircle => {
                let dx = state.x - self.loiter_center.0;
                let dy = state.y - self.loiter_center.1;
                (dx.hypot(dy) - self.r_loiter).abs()
            }
        }
    }

    /// Curvature command and (possibly advanced) phase for a vehicle at its
    /// current arclength, with the off-path diagnostic check.
    pub fn command(&self, state: &UavState, v_cmd: f64) -> Result<(f64, Phase), SimError> {
        let deviation = self.cross_track(state);
        if deviation > CROSS_TRACK_TOLERANCE {
            return Err(SimError::CrossTrack {
                deviation,
                tolerance: CROSS_TRACK_TOLERANCE,
                context: String::new(),
            });
        }
        let mut phase = state.phase;
        if state.arclength >= self.phase_length(phase) {
            phase = match phase {
                Phase::MainLane => Phase::TransitLink,
                Phase::TransitLink => Phase::TransitLane,
                Phase::TransitLane => Phase::LoiterCircle,
                Phase::LoiterCircle => Phase::LoiterCircle,
            };
        }
        Ok((self.accel(phase, v_cmd), phase))
    }
}

/// Curvature command and phase progression for a vehicle on the corridor
/// path, in the frame whose lane exit is at the origin.
///
/// Returns the lateral acceleration for the (possibly advanced) phase and
/// that phase: when `state.arclength` has reached the current element's
/// length, the result names the next phase and the caller is expected to
/// reset `arclength` by the completed length. The main-lane exit and the
/// loiter circle are not arclength-bounded; callers command those
/// transitions. Errors when the state sits farther than
/// [`CROSS_TRACK_TOLERANCE`] from its nominal element.
pub fn path_command(
    state: &UavState,
    config: &CorridorConfig,
    v_cmd: f64,
) -> Result<(f64, Phase), SimError> {
    PathGeometry::new(config, 0.0).command(state, v_cmd)
}
