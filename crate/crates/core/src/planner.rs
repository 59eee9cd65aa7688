//! Desired-slot selection, hop chains, and per-vehicle speed commands.
//!
//! Given the classified ring at the moment the incoming UAV leaves the main
//! lane, the planner picks the slot it will occupy and the minimal chain of
//! occupied slots that must each advance one position to free it. Selection
//! uses the *open* arrival window (strictly inside `(t_min, t_max)`): a plan
//! must leave real speed authority on both sides, so boundary arrivals that
//! the classifier still reports as feasible are not plannable targets.

use crate::geometry::{transit_distance, CorridorConfig, FeasibilityWindow};
use crate::slots::SlotTiming;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// The planner's output: which slot to fly to, when, how fast, and which
/// occupants hop to make room.
///
/// `hop_slots` lists the chain starting next to the hole it fills: each
/// listed slot's occupant overspeeds one position forward (slot `i` to the
/// angle of slot `i+1`), so the first entry fills the empty slot ahead of the
/// chain and the last entry is the slot freed for the incoming UAV; empty
/// means a direct insertion. `t_in` is measured from the moment the UAV
/// leaves the main lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionPlan {
    pub desired_slot: u32,
    #[serde(rename = "t_in_s")]
    pub t_in: f64,
    #[serde(rename = "v_in_mps")]
    pub v_in: f64,
    pub hop_slots: Vec<u32>,
    #[serde(rename = "t_hop_s")]
    pub t_hop: f64,
}

/// Commanded speeds for every vehicle at one instant.
///
/// `v_loiter_each[i]` is the command for the UAV in slot `i+1`; hopping slots
/// get `v_max` until the hop timer expires, everything else `v_min`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedCommand {
    #[serde(rename = "v_incoming_mps")]
    pub v_incoming: f64,
    #[serde(rename = "v_loiter_each_mps")]
    pub v_loiter_each: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no feasible slot: every candidate arrival misses the open speed window")]
    NoFeasibleSlot,
    #[error(
        "hop too slow: one-slot hop takes {t_hop} s but the earliest arrival is {t_min} s; \
         a freed slot could not be reached in time"
    )]
    HopTooSlow { t_hop: f64, t_min: f64 },
}

/// Time for an occupant to advance one slot gap at full overspeed: the
/// hopping UAV flies `v_max` while the ring turns at `v_loiter`, so it gains
/// on the slot ahead at `v_max − v_loiter` over the arc `2π r_loiter / N`.
pub fn hop_duration(config: &CorridorConfig) -> f64 {
    TAU * config.r_loiter / (config.n_slots as f64 * (config.v_max - config.v_loiter()))
}

fn cyclic_slot(index: i64, n: u32) -> u32 {
    (index - 1).rem_euclid(n as i64) as u32 + 1
}

/// Picks the insertion target and hop chain for the classified ring state.
///
/// Preference order: the earliest-arriving unoccupied slot strictly inside
/// the window; otherwise the target needing the fewest hops `k`, scanning
/// `k = 1, 2, …` and, within each `k`, unoccupied slots in ascending arrival
/// order — the candidate is the slot `k` positions behind an unoccupied one,
/// and every occupant from the candidate up to the hole advances one
/// position, freeing the candidate. Fails with [`HopTooSlow`]
/// if a single hop cannot finish before the earliest possible arrival
/// (`t_hop >= t_min`), since then no hop-freed slot is reachable; with
/// [`NoFeasibleSlot`] if no candidate arrival lands strictly inside the
/// window.
///
/// [`HopTooSlow`]: PlanError::HopTooSlow
/// [`NoFeasibleSlot`]: PlanError::NoFeasibleSlot
pub fn plan_insertion(
    timing: &SlotTiming,
    window: &FeasibilityWindow,
    config: &CorridorConfig,
) -> Result<InsertionPlan, PlanError> {
    let t_hop = hop_duration(config);
    // Checked before anything else: if a hop outlasts every possible arrival,
    // planning only works out when a slot is directly open, and reporting the
    // timing defect takes priority over that luck.
    if t_hop >= window.t_min {
        return Err(PlanError::HopTooSlow {
            t_hop,
            t_min: window.t_min,
        });
    }

    let inside = |t: f64| t > window.t_min && t < window.t_max;
    let d = transit_distance(config);
    let make = |slot: u32, t_in: f64, hop_slots: Vec<u32>| InsertionPlan {
        desired_slot: slot,
        t_in,
        v_in: d / t_in,
        hop_slots,
        t_hop,
    };

    // Direct insertion: earliest unoccupied slot strictly inside the window.
    for (&slot, &t) in timing.s_uf.iter().zip(&timing.t_uf) {
        if inside(t) {
            return Ok(make(slot, t, Vec::new()));
        }
    }

    // Hop chains: for k = 1, 2, … the slot k positions behind an unoccupied
    // slot e becomes the target once e−1, …, e−k each advance one position
    // (e−1 fills e, leaving e−k open).
    // Every intermediate slot is necessarily occupied — a direct check is
    // redundant — because an empty one would have produced a plan at a
    // smaller k (or a direct insertion) in an earlier iteration.
    let n = config.n_slots;
    for k in 1..n as i64 {
        for (&e, _) in timing.s_e.iter().zip(&timing.t_e) {
            let candidate = cyclic_slot(e as i64 - k, n);
            let t = timing.t_arrival[(candidate - 1) as usize];
            if inside(t) {
                let hop_slots = (1..=k)
                    .map(|j| cyclic_slot(e as i64 - j, n))
                    .collect();
                return Ok(make(candidate, t, hop_slots));
            }
        }
    }

    Err(PlanError::NoFeasibleSlot)
}

/// Speed command for every vehicle at time `t_count` since the plan was made:
/// the incoming UAV holds `v_in`; slots in the hop chain hold `v_max` while
/// the hop timer runs (`t_count <= t_hop`), all other slots hold `v_min`.
pub fn speed_commands(plan: &InsertionPlan, t_count: f64, config: &CorridorConfig) -> SpeedCommand {
    let hopping = t_count <= plan.t_hop;
    let v_loiter_each = (1..=config.n_slots)
        .map(|i| {
            if hopping && plan.hop_slots.contains(&i) {
                config.v_max
            } else {
                config.v_min
            }
        })
        .collect();
    SpeedCommand {
        v_incoming: plan.v_in,
        v_loiter_each,
    }
}

/// Reference planner: exhaustively scores every slot and returns the best
/// `(hop count, tie time)` choice. Independent of [`plan_insertion`]'s search
/// order, so tests can demand exact agreement between the two.
///
/// For each slot whose arrival is strictly inside the window: unoccupied
/// costs `(0, t_arrival)`; occupied costs `(m, t_e)` where `m` is the
/// distance to the first unoccupied slot ahead (the chain's far end) and
/// `t_e` that slot's arrival time. Minimizing the pair picks the fewest hops,
/// then the earliest far-end arrival.
pub fn oracle_plan(
    timing: &SlotTiming,
    window: &FeasibilityWindow,
    config: &CorridorConfig,
) -> Result<InsertionPlan, PlanError> {
    let t_hop = hop_duration(config);
    if t_hop >= window.t_min {
        return Err(PlanError::HopTooSlow {
            t_hop,
            t_min: window.t_min,
        });
    }

    let n = config.n_slots;
    let occupied = |slot: u32| !timing.s_e.contains(&slot);
    let inside = |t: f64| t > window.t_min && t < window.t_max;

    let mut best: Option<(u32, f64, u32)> = None; // (hops, tie time, slot)
    for candidate in 1..=n {
        let t = timing.t_arrival[(candidate - 1) as usize];
        if !inside(t) {
            continue;
        }
        let key = if !occupied(candidate) {
            Some((0u32, t))
        } else {
            // First unoccupied slot ahead of the candidate, if any.
            (1..n)
                .map(|m| (m, cyclic_slot(candidate as i64 + m as i64, n)))
                .find(|&(_, ahead)| !occupied(ahead))
                .map(|(m, ahead)| (m, timing.t_arrival[(ahead - 1) as usize]))
        };
        if let Some((hops, tie)) = key {
            let better = match best {
                None => true,
                Some((bh, bt, _)) => (hops, tie) < (bh, bt),
            };
            if better {
                best = Some((hops, tie, candidate));
            }
        }
    }

    let (hops, _, slot) = best.ok_or(PlanError::NoFeasibleSlot)?;
    let d = transit_distance(config);
    let t_in = timing.t_arrival[(slot - 1) as usize];
    let hop_slots = (0..hops)
        .rev()
        .map(|j| cyclic_slot(slot as i64 + j as i64, n))
        .collect();
    Ok(InsertionPlan {
        desired_slot: slot,
        t_in,
        v_in: d / t_in,
        hop_slots,
        t_hop,
    })
}
