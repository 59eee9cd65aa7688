//! Full-scenario execution: one incoming UAV on the corridor path, one UAV
//! per occupied slot on the loiter circle, the rotating ring, the planner
//! handoff, and the safety monitors.
//!
//! The loop integrates every vehicle with [`step_kinematics`] on a fixed
//! grid, but splits any step that crosses a timeline boundary (lane exit,
//! link end, hop completion, insertion, run end) so commands change at the
//! exact event time rather than the next grid point. Speeds are therefore
//! piecewise constant with exact switch times, and quantities like the hop's
//! one-slot displacement come out exact instead of drifting by O(dt).

use super::{step_kinematics, PathGeometry, Phase, SimError, UavState, CROSS_TRACK_TOLERANCE};
use crate::geometry::{feasibility_window, validate_design, CorridorConfig};
use crate::planner::{plan_insertion, InsertionPlan};
use crate::scenario::ScenarioConfig;
use crate::slots::{classify_slots, normalize_angle, SlotRing, SlotSnapshot};
use serde::{Deserialize, Serialize};

/// Timeline milestones, in causal order. Events may share a timestamp when
/// the model makes them simultaneous (planning is instantaneous at the lane
/// exit; the slot is claimed the moment the insertion point is reached), so
/// timestamps are non-decreasing and the vector order is the causal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SimEvent {
    EnterTransitLink {
        t_s: f64,
    },
    PlanComputed {
        t_s: f64,
        desired_slot: u32,
        t_in_s: f64,
        v_in_mps: f64,
        hop_count: u32,
    },
    HopStart {
        t_s: f64,
        hop_slots: Vec<u32>,
    },
    HopComplete {
        t_s: f64,
        freed_slot: u32,
        filled_slot: u32,
    },
    ReachInsertionPoint {
        t_s: f64,
        insertion_error_m: f64,
    },
    SlotOccupied {
        t_s: f64,
        slot: u32,
    },
}

impl SimEvent {
    pub fn t(&self) -> f64 {
        match self {
            SimEvent::EnterTransitLink { t_s }
            | SimEvent::PlanComputed { t_s, .. }
            | SimEvent::HopStart { t_s, .. }
            | SimEvent::HopComplete { t_s, .. }
            | SimEvent::ReachInsertionPoint { t_s, .. }
            | SimEvent::SlotOccupied { t_s, .. } => *t_s,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SimEvent::EnterTransitLink { .. } => "EnterTransitLink",
            SimEvent::PlanComputed { .. } => "PlanComputed",
            SimEvent::HopStart { .. } => "HopStart",
            SimEvent::HopComplete { .. } => "HopComplete",
            SimEvent::ReachInsertionPoint { .. } => "ReachInsertionPoint",
            SimEvent::SlotOccupied { .. } => "SlotOccupied",
        }
    }
}

/// One vehicle's sampled states, aligned with [`SimulationTrace::times`].
/// Vehicle 0 is the incoming UAV; loitering UAVs take ids 1, 2, … in
/// ascending order of their starting slot.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrace {
    pub vehicle_id: u32,
    /// Starting slot for loitering UAVs; `None` for the incoming UAV.
    pub initial_slot: Option<u32>,
    pub states: Vec<UavState>,
}

/// Headline numbers for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Minimum incoming-UAV–to–desired-slot distance from lane exit onward.
    pub d_sep_min: f64,
    /// Minimum distance over all vehicle pairs and the whole run; `None`
    /// (JSON `null`) when there is only one vehicle, standing in for +∞.
    pub pairwise_min: Option<f64>,
    pub t_in_planned: f64,
    pub t_in_actual: f64,
    pub hop_count: u32,
    pub t_hop: f64,
    /// Distance between the incoming UAV and the desired slot's center at the
    /// moment it reaches the insertion point — the rendezvous residual.
    pub insertion_error_m: f64,
}

/// Everything one run produced. Sampled states sit on the `dt` grid plus the
/// exact final time; event timestamps are exact boundary times, not grid
/// times. When the scenario asks for a clockwise loiter, recorded states are
/// the mirror image (y, θ, a negated) of the internal counterclockwise run —
/// distances and timings are unaffected.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub dt: f64,
    pub times: Vec<f64>,
    pub vehicles: Vec<VehicleTrace>,
    pub events: Vec<SimEvent>,
    pub plan: InsertionPlan,
    /// (t, d_sep) at each recorded sample from the lane exit onward, plus the
    /// exact lane-exit and insertion instants.
    pub d_sep_series: Vec<(f64, f64)>,
    pub d_sep_min: f64,
    pub pairwise_min: Option<f64>,
    pub metrics: RunMetrics,
    /// Ring state at the end of the run.
    pub final_ring: Vec<SlotSnapshot>,
    /// Scenario facts needed to reconstruct slot positions from the trace.
    pub entry_x: f64,
    pub initial_slot1_gamma: f64,
    pub clockwise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Boundary {
    LaneExit,
    LinkEnd,
    HopEnd,
    Insert,
    End,
}

struct Vehicle {
    id: u32,
    state: UavState,
    slot: Option<u32>,
    hopping: bool,
}

fn mirrored(state: &UavState, clockwise: bool) -> UavState {
    if clockwise {
        UavState {
            y: -state.y,
            theta: -state.theta,
            a: -state.a,
            ..*state
        }
    } else {
        *state
    }
}

/// Runs the full timeline and returns the trace, or the first error: design
/// violations, planner failures, a cross-track diagnostic, or a safety abort
/// the moment any pair of vehicles closes below `d_safe`.
pub fn run_scenario(scenario: &ScenarioConfig) -> Result<SimulationTrace, SimError> {
    let config = &scenario.corridor;
    let violations = validate_design(config);
    if !violations.is_empty() {
        return Err(SimError::InvalidDesign(violations));
    }
    let dt = scenario.run.dt;
    if dt <= 0.0 || !dt.is_finite() {
        return Err(SimError::BadScenario(format!(
            "dt must be positive and finite (got {dt})"
        )));
    }
    if scenario.entry.offset < 0.0 || !scenario.entry.offset.is_finite() {
        return Err(SimError::BadScenario(format!(
            "entry offset must be non-negative (got {})",
            scenario.entry.offset
        )));
    }
    if scenario.entry.speed <= 0.0 || !scenario.entry.speed.is_finite() {
        return Err(SimError::BadScenario(format!(
            "entry speed must be positive (got {})",
            scenario.entry.speed
        )));
    }
    if scenario.run.duration_after_insertion < 0.0 || scenario.run.duration_after_insertion.is_nan()
    {
        return Err(SimError::BadScenario(format!(
            "duration after insertion must be non-negative (got {})",
            scenario.run.duration_after_insertion
        )));
    }
    if !scenario.ring.phase_offset.is_finite() {
        return Err(SimError::BadScenario(
            "ring phase offset must be finite".into(),
        ));
    }

    let mut ring = SlotRing::new(
        config,
        scenario.ring.phase_offset,
        &scenario.ring.occupied_slots,
    )
    .map_err(|e| SimError::BadScenario(e.to_string()))?;

    let geom = PathGeometry::new(config, scenario.entry.offset);
    let window = feasibility_window(config);
    let v_loiter = config.v_loiter();
    let clockwise = scenario.ring.clockwise;
    let d_safe = config.d_safe;

    // Vehicle 0: the incomer at the main-lane origin. One loiter vehicle per
    // occupied slot, ascending.
    let mut vehicles = vec![Vehicle {
        id: 0,
        state: UavState {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            v: scenario.entry.speed,
            a: 0.0,
            phase: Phase::MainLane,
            arclength: 0.0,
        },
        slot: None,
        hopping: false,
    }];
    for snap in ring.snapshot() {
        if snap.occupied {
            vehicles.push(Vehicle {
                id: vehicles.len() as u32,
                state: geom.loiter_state(snap.gamma_rad, v_loiter),
                slot: Some(snap.index),
                hopping: false,
            });
        }
    }
    let initial_slots: Vec<Option<u32>> = vehicles.iter().map(|v| v.slot).collect();

    let t_e = scenario.entry.offset / scenario.entry.speed;
    let mut pending: Vec<(f64, Boundary)> = vec![(t_e, Boundary::LaneExit)];
    // Keeps the queue sorted by time; equal times preserve push order, which
    // is the causal order.
    fn push_boundary(pending: &mut Vec<(f64, Boundary)>, time: f64, b: Boundary) {
        let pos = pending
            .iter()
            .position(|&(tb, _)| tb > time)
            .unwrap_or(pending.len());
        pending.insert(pos, (time, b));
    }

    let mut events: Vec<SimEvent> = Vec::new();
    let mut plan: Option<InsertionPlan> = None;
    let mut t_end: Option<f64> = None;
    let mut t_insert: Option<f64> = None;
    let mut finished = false;

    let mut times: Vec<f64> = Vec::new();
    let mut states: Vec<Vec<UavState>> = vec![Vec::new(); vehicles.len()];
    let mut d_sep_series: Vec<(f64, f64)> = Vec::new();
    let mut d_sep_min = f64::INFINITY;
    let mut pairwise_min = f64::INFINITY;
    let mut insertion_error = f64::NAN;

    let mut t = 0.0;

    // Closures can't borrow the whole mutable world at once; small helper fns
    // take exactly what they touch.
    fn check_safety(
        vehicles: &[Vehicle],
        t: f64,
        d_safe: f64,
        pairwise_min: &mut f64,
    ) -> Result<(), SimError> {
        for i in 0..vehicles.len() {
            for j in (i + 1)..vehicles.len() {
                let a = &vehicles[i].state;
                let b = &vehicles[j].state;
                let d = (a.x - b.x).hypot(a.y - b.y);
                if d < *pairwise_min {
                    *pairwise_min = d;
                }
                if d < d_safe {
                    return Err(SimError::SafetyViolation {
                        t,
                        a: vehicles[i].id,
                        b: vehicles[j].id,
                        distance: d,
                        d_safe,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_cross_track(vehicles: &[Vehicle], geom: &PathGeometry, t: f64) -> Result<(), SimError> {
        for v in vehicles {
            let deviation = geom.cross_track(&v.state);
            if deviation > CROSS_TRACK_TOLERANCE {
                return Err(SimError::CrossTrack {
                    deviation,
                    tolerance: CROSS_TRACK_TOLERANCE,
                    context: format!(" (vehicle {} at t = {} s)", v.id, t),
                });
            }
        }
        Ok(())
    }

    fn d_sep_now(
        vehicles: &[Vehicle],
        ring: &SlotRing,
        geom: &PathGeometry,
        plan: &InsertionPlan,
    ) -> f64 {
        let (sx, sy) = geom.slot_position(ring.gamma(plan.desired_slot));
        let inc = &vehicles[0].state;
        (inc.x - sx).hypot(inc.y - sy)
    }

    // Advance every vehicle and the ring by h, then run the monitors.
    let advance = |vehicles: &mut Vec<Vehicle>,
                   ring: &mut SlotRing,
                   t: &mut f64,
                   h: f64,
                   pairwise_min: &mut f64,
                   d_sep_min: &mut f64,
                   plan: &Option<InsertionPlan>|
     -> Result<(), SimError> {
        for v in vehicles.iter_mut() {
            v.state = step_kinematics(v.state, h)?;
            v.state.arclength += v.state.v * h;
        }
        ring.tick(h);
        *t += h;
        check_cross_track(vehicles, &geom, *t)?;
        check_safety(vehicles, *t, d_safe, pairwise_min)?;
        if let Some(p) = plan {
            let d = d_sep_now(vehicles, ring, &geom, p);
            if d < *d_sep_min {
                *d_sep_min = d;
            }
        }
        Ok(())
    };

    // Initial checks and sample (handles a zero-length main-lane run-in by
    // firing the lane exit before anything is recorded).
    check_safety(&vehicles, t, d_safe, &mut pairwise_min)?;
    check_cross_track(&vehicles, &geom, t)?;

    let mut step_index: u64 = 0;
    loop {
        // Process due boundaries, then integrate to the next grid point (or
        // the run end, whichever is sooner), splitting at each boundary.
        let grid = step_index as f64 * dt;
        let target = match t_end {
            Some(te) if te <= grid => te,
            _ => grid,
        };

        while let Some(&(tb, boundary)) = pending.first() {
            if tb > target {
                break;
            }
            if tb > t {
                let h = tb - t;
                advance(
                    &mut vehicles,
                    &mut ring,
                    &mut t,
                    h,
                    &mut pairwise_min,
                    &mut d_sep_min,
                    &plan,
                )?;
            }
            pending.remove(0);
            match boundary {
                Boundary::LaneExit => {
                    let timing = classify_slots(&ring, &window, config);
                    let p = plan_insertion(&timing, &window, config)?;
                    let incomer = &mut vehicles[0];
                    incomer.state.v = p.v_in;
                    incomer.state.a = geom.accel(Phase::TransitLink, p.v_in);
                    incomer.state.phase = Phase::TransitLink;
                    incomer.state.arclength = 0.0;
                    events.push(SimEvent::EnterTransitLink { t_s: t });
                    events.push(SimEvent::PlanComputed {
                        t_s: t,
                        desired_slot: p.desired_slot,
                        t_in_s: p.t_in,
                        v_in_mps: p.v_in,
                        hop_count: p.hop_slots.len() as u32,
                    });
                    if !p.hop_slots.is_empty() {
                        events.push(SimEvent::HopStart {
                            t_s: t,
                            hop_slots: p.hop_slots.clone(),
                        });
                        for v in vehicles.iter_mut() {
                            if let Some(s) = v.slot {
                                if p.hop_slots.contains(&s) {
                                    v.hopping = true;
                                    v.state.v = config.v_max;
                                    v.state.a = geom.accel(Phase::LoiterCircle, config.v_max);
                                }
                            }
                        }
                        push_boundary(&mut pending, t + p.t_hop, Boundary::HopEnd);
                    }
                    push_boundary(
                        &mut pending,
                        t + geom.phase_length(Phase::TransitLink) / p.v_in,
                        Boundary::LinkEnd,
                    );
                    let ti = t + p.t_in;
                    push_boundary(&mut pending, ti, Boundary::Insert);
                    let te = ti + scenario.run.duration_after_insertion;
                    push_boundary(&mut pending, te, Boundary::End);
                    t_insert = Some(ti);
                    t_end = Some(te);
                    let d0 = d_sep_now(&vehicles, &ring, &geom, &p);
                    d_sep_min = d_sep_min.min(d0);
                    d_sep_series.push((t, d0));
                    plan = Some(p);
                }
                Boundary::LinkEnd => {
                    let incomer = &mut vehicles[0];
                    incomer.state.phase = Phase::TransitLane;
                    incomer.state.arclength = 0.0;
                    incomer.state.a = 0.0;
                }
                Boundary::HopEnd => {
                    let p = plan.as_ref().expect("hop follows a plan");
                    let n = config.n_slots;
                    let freed = p.desired_slot;
                    let filled = (p.desired_slot + p.hop_slots.len() as u32 - 1) % n + 1;
                    for v in vehicles.iter_mut() {
                        if v.hopping {
                            v.hopping = false;
                            v.slot = v.slot.map(|s| s % n + 1);
                            v.state.v = v_loiter;
                            v.state.a = geom.accel(Phase::LoiterCircle, v_loiter);
                        }
                    }
                    ring.set_occupied(filled, true);
                    ring.set_occupied(freed, false);
                    events.push(SimEvent::HopComplete {
                        t_s: t,
                        freed_slot: freed,
                        filled_slot: filled,
                    });
                }
                Boundary::Insert => {
                    let p = plan.as_ref().expect("insertion follows a plan");
                    let err = d_sep_now(&vehicles, &ring, &geom, p);
                    insertion_error = err;
                    d_sep_min = d_sep_min.min(err);
                    d_sep_series.push((t, err));
                    let incomer = &mut vehicles[0];
                    incomer.state.phase = Phase::LoiterCircle;
                    incomer.state.arclength = 0.0;
                    incomer.state.v = v_loiter;
                    incomer.state.a = geom.accel(Phase::LoiterCircle, v_loiter);
                    incomer.slot = Some(p.desired_slot);
                    ring.set_occupied(p.desired_slot, true);
                    events.push(SimEvent::ReachInsertionPoint {
                        t_s: t,
                        insertion_error_m: err,
                    });
                    events.push(SimEvent::SlotOccupied {
                        t_s: t,
                        slot: p.desired_slot,
                    });
                }
                Boundary::End => {
                    finished = true;
                }
            }
        }

        if t < target {
            let h = target - t;
            advance(
                &mut vehicles,
                &mut ring,
                &mut t,
                h,
                &mut pairwise_min,
                &mut d_sep_min,
                &plan,
            )?;
        }

        times.push(t);
        for (i, v) in vehicles.iter().enumerate() {
            states[i].push(mirrored(&v.state, clockwise));
        }
        if let Some(p) = &plan {
            d_sep_series.push((t, d_sep_now(&vehicles, &ring, &geom, p)));
        }
        if finished {
            break;
        }
        step_index += 1;
    }

    let plan = plan.expect("the run always reaches the lane exit");
    let t_insert = t_insert.expect("the run always reaches the insertion point");
    let has_pairs = vehicles.len() > 1;
    let metrics = RunMetrics {
        d_sep_min,
        pairwise_min: has_pairs.then_some(pairwise_min),
        t_in_planned: plan.t_in,
        t_in_actual: t_insert - t_e,
        hop_count: plan.hop_slots.len() as u32,
        t_hop: plan.t_hop,
        insertion_error_m: insertion_error,
    };

    Ok(SimulationTrace {
        dt,
        times,
        vehicles: vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| VehicleTrace {
                vehicle_id: v.id,
                initial_slot: initial_slots[i],
                states: std::mem::take(&mut states[i]),
            })
            .collect(),
        events,
        plan,
        d_sep_series,
        d_sep_min: metrics.d_sep_min,
        pairwise_min: metrics.pairwise_min,
        metrics,
        final_ring: ring.snapshot(),
        entry_x: scenario.entry.offset,
        initial_slot1_gamma: normalize_angle(scenario.ring.phase_offset),
        clockwise,
    })
}

/// Recomputes the two safety minima from a recorded trace: the incoming-UAV
/// to desired-slot distance from the lane exit onward (slot positions are
/// reconstructed from the stored ring phase), and the minimum over all
/// vehicle pairs across the whole run. `None` stands in for +∞ when the run
/// had a single vehicle. Sample-level granularity: the live run tracks the
/// same minima at substep boundaries too, so its values can sit at or below
/// these.
pub fn measure_separation(trace: &SimulationTrace, config: &CorridorConfig) -> (f64, Option<f64>) {
    let mut pairwise: Option<f64> = None;
    for k in 0..trace.times.len() {
        for i in 0..trace.vehicles.len() {
            for j in (i + 1)..trace.vehicles.len() {
                let a = &trace.vehicles[i].states[k];
                let b = &trace.vehicles[j].states[k];
                let d = (a.x - b.x).hypot(a.y - b.y);
                if pairwise.is_none_or(|p| d < p) {
                    pairwise = Some(d);
                }
            }
        }
    }

    let t_e = trace
        .events
        .iter()
        .find_map(|e| match e {
            SimEvent::EnterTransitLink { t_s } => Some(*t_s),
            _ => None,
        })
        .unwrap_or(0.0);
    let geom = PathGeometry::new(config, trace.entry_x);
    let alpha = config.alpha();
    let omega = config.omega();
    let desired = trace.plan.desired_slot;
    let mut d_sep_min = f64::INFINITY;
    for (k, &t) in trace.times.iter().enumerate() {
        if t < t_e {
            continue;
        }
        let gamma = normalize_angle(
            trace.initial_slot1_gamma + alpha * (desired - 1) as f64 + omega * t,
        );
        let (sx, sy) = geom.slot_position(gamma);
        let sy = if trace.clockwise { -sy } else { sy };
        let inc = &trace.vehicles[0].states[k];
        let d = (inc.x - sx).hypot(inc.y - sy);
        if d < d_sep_min {
            d_sep_min = d;
        }
    }
    (d_sep_min, pairwise)
}
