//! Corridor design quantities and their validation.
//!
//! A corridor joins a straight main lane to a loiter circle of radius `r_loiter`
//! carrying N equiangular rotating slots. The incoming UAV leaves the main lane
//! at the entry point, flies a quarter-circle transit link of radius
//! `r_transit`, then a straight transit lane of length `d_lane + r_loiter`
//! tangent to the circle at the insertion point. Everything here is a pure
//! function of the design parameters; angles are radians, lengths meters,
//! speeds m/s.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Absolute tolerance used by [`validate_design`] for design (in)equalities,
/// so designs sitting exactly on a bound do not fail from rounding.
pub const DESIGN_TOLERANCE: f64 = 1e-9;

/// Full parameter set for one corridor design.
///
/// Config-file keys carry explicit unit suffixes (`_m`, `_mps`); the struct
/// fields drop them. `v_loiter_override` is the optional steady slot-rotation
/// speed; when absent it defaults to `v_min` (see [`CorridorConfig::v_loiter`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorConfig {
    pub n_slots: u32,
    #[serde(rename = "v_min_mps")]
    pub v_min: f64,
    #[serde(rename = "v_max_mps")]
    pub v_max: f64,
    #[serde(
        rename = "v_loiter_mps",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub v_loiter_override: Option<f64>,
    #[serde(rename = "r_loiter_m")]
    pub r_loiter: f64,
    #[serde(rename = "r_transit_m")]
    pub r_transit: f64,
    #[serde(rename = "d_lane_m")]
    pub d_lane: f64,
    #[serde(rename = "d_safe_m")]
    pub d_safe: f64,
}

impl CorridorConfig {
    /// Steady slot-rotation speed: the configured override, else `v_min`.
    pub fn v_loiter(&self) -> f64 {
        self.v_loiter_override.unwrap_or(self.v_min)
    }

    /// Speed ratio `v_max / v_min`.
    pub fn k_v(&self) -> f64 {
        self.v_max / self.v_min
    }

    /// Angular separation between consecutive slots, `2π / n_slots`.
    pub fn alpha(&self) -> f64 {
        TAU / self.n_slots as f64
    }

    /// Slot angular rate, `v_loiter / r_loiter`.
    pub fn omega(&self) -> f64 {
        self.v_loiter() / self.r_loiter
    }
}

/// Achievable arrival-time window at the insertion point and the matching
/// slot angular displacements.
///
/// `phi`/`psi` are the slot sweep angles during the fastest/slowest transit:
/// `phi = omega * t_min`, `psi = omega * t_max`. With the default
/// `v_loiter = v_min` these reduce to `D_L / (r_loiter * k_v)` and
/// `D_L / r_loiter`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityWindow {
    #[serde(rename = "phi_rad")]
    pub phi: f64,
    #[serde(rename = "psi_rad")]
    pub psi: f64,
    #[serde(rename = "t_min_s")]
    pub t_min: f64,
    #[serde(rename = "t_max_s")]
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("slot count must be at least 2 (got {0})")]
    TooFewSlots(u32),
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("degenerate speed band: v_max ({v_max}) must exceed v_min ({v_min})")]
    DegenerateSpeedBand { v_min: f64, v_max: f64 },
}

/// One failed design check. Violations are data, not errors: a design report
/// lists all of them at once.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignViolation {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("loiter radius below slot-separation bound: need {required} m, have {actual} m")]
    LoiterRadiusBelowBound { required: f64, actual: f64 },
    #[error("lane separation below bound: need {required} m, have {actual} m")]
    LaneSeparationBelowBound { required: f64, actual: f64 },
    #[error("feasibility window too narrow: spans {span} rad, slot gap is {required} rad")]
    WindowTooNarrow { span: f64, required: f64 },
}

/// Smallest loiter radius keeping N equiangular slots at least `d_safe` apart:
/// `d_safe / (2 sin^2(pi / n_slots))`.
///
/// The adjacent-slot chord at this radius is `d_safe / sin(pi/n)`, which is at
/// least `d_safe`, with slack that shrinks as N grows.
pub fn required_loiter_radius(n_slots: u32, d_safe: f64) -> Result<f64, GeometryError> {
    if n_slots < 2 {
        return Err(GeometryError::TooFewSlots(n_slots));
    }
    if d_safe <= 0.0 || d_safe.is_nan() {
        return Err(GeometryError::NonPositive {
            name: "d_safe",
            value: d_safe,
        });
    }
    let s = (PI / n_slots as f64).sin();
    Ok(d_safe / (2.0 * s * s))
}

/// Minimum transit-lane length that keeps the arrival window at least one slot
/// gap wide: `max(0, (2π r_loiter / n) · k_v/(k_v − 1) − π r_transit/2 − r_loiter)`.
///
/// The zero branch is an exact `max`, no epsilon slack.
pub fn min_lane_separation(config: &CorridorConfig) -> Result<f64, GeometryError> {
    if config.v_max <= config.v_min {
        return Err(GeometryError::DegenerateSpeedBand {
            v_min: config.v_min,
            v_max: config.v_max,
        });
    }
    let k_v = config.k_v();
    let raw = (TAU * config.r_loiter / config.n_slots as f64) * (k_v / (k_v - 1.0))
        - PI * config.r_transit / 2.0
        - config.r_loiter;
    Ok(raw.max(0.0))
}

/// Path length from the main-lane exit to the insertion point:
/// quarter link arc + transit lane = `π r_transit/2 + d_lane + r_loiter`.
pub fn transit_distance(config: &CorridorConfig) -> f64 {
    PI * config.r_transit / 2.0 + config.d_lane + config.r_loiter
}

/// Arrival-time window over the transit distance at the speed bounds, plus the
/// slot sweep angles over that window.
pub fn feasibility_window(config: &CorridorConfig) -> FeasibilityWindow {
    let d = transit_distance(config);
    let t_min = d / config.v_max;
    let t_max = d / config.v_min;
    let omega = config.omega();
    FeasibilityWindow {
        phi: omega * t_min,
        psi: omega * t_max,
        t_min,
        t_max,
    }
}

/// Runs every design check with the default tolerance. Empty result means the
/// design is sound.
pub fn validate_design(config: &CorridorConfig) -> Vec<DesignViolation> {
    validate_design_with_tolerance(config, DESIGN_TOLERANCE)
}

/// [`validate_design`] with an explicit absolute tolerance on each bound.
///
/// Checks, in order: parameter sanity (positive lengths and speeds, ordered
/// speed band, slot count), the slot-separation radius bound, the lane-length
/// bound, and that the window spans at least one slot gap. Returns all
/// violations, not just the first.
pub fn validate_design_with_tolerance(config: &CorridorConfig, tol: f64) -> Vec<DesignViolation> {
    let mut out = Vec::new();
    let mut bad = |msg: String| out.push(DesignViolation::BadParameter(msg));

    if config.n_slots < 2 {
        bad(format!("n_slots must be at least 2 (got {})", config.n_slots));
    }
    for (name, value) in [
        ("v_min", config.v_min),
        ("v_max", config.v_max),
        ("r_loiter", config.r_loiter),
        ("r_transit", config.r_transit),
        ("d_safe", config.d_safe),
    ] {
        if value <= 0.0 || value.is_nan() {
            bad(format!("{name} must be positive (got {value})"));
        }
    }
    if config.d_lane < 0.0 || config.d_lane.is_nan() {
        bad(format!("d_lane must be non-negative (got {})", config.d_lane));
    }
    if config.v_max <= config.v_min {
        bad(format!(
            "degenerate speed band: v_max ({}) must exceed v_min ({})",
            config.v_max, config.v_min
        ));
    }
    let v_s = config.v_loiter();
    if v_s < config.v_min || v_s >= config.v_max || v_s.is_nan() {
        bad(format!(
            "v_loiter ({v_s}) must lie in [v_min, v_max) = [{}, {})",
            config.v_min, config.v_max
        ));
    }
    if !out.is_empty() {
        // Dependent checks divide by these parameters; report what we have.
        return out;
    }

    let required_radius =
        required_loiter_radius(config.n_slots, config.d_safe).expect("parameters checked above");
    if config.r_loiter + tol < required_radius {
        out.push(DesignViolation::LoiterRadiusBelowBound {
            required: required_radius,
            actual: config.r_loiter,
        });
    }

    let required_lane =
        min_lane_separation(config).expect("speed band checked above");
    if config.d_lane + tol < required_lane {
        out.push(DesignViolation::LaneSeparationBelowBound {
            required: required_lane,
            actual: config.d_lane,
        });
    }

    let window = feasibility_window(config);
    let span = window.psi - window.phi;
    let alpha = config.alpha();
    if span + tol < alpha {
        out.push(DesignViolation::WindowTooNarrow {
            span,
            required: alpha,
        });
    }
    out
}
