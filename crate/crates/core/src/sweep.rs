//! Seeded batch randomization: many runs of one corridor design under random
//! ring occupancy and phase, aggregating planner/oracle agreement, outcome
//! counts, the hop-count distribution, and the worst pairwise separation.

use crate::geometry::{feasibility_window, validate_design};
use crate::planner::{oracle_plan, plan_insertion, PlanError};
use crate::scenario::ScenarioConfig;
use crate::sim::{run_scenario, SimError};
use crate::slots::{advance, classify_slots, SlotRing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;

/// Post-insertion tail used for every randomized run. After insertion all
/// vehicles ride the circle at the slot speed, so separations are frozen and
/// longer tails add time without adding geometry.
pub const SWEEP_TAIL_S: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub runs: u64,
    pub seed: u64,
    /// Integration step override; `None` keeps the base scenario's dt.
    pub dt: Option<f64>,
}

/// Aggregate of one sweep. Outcome counters partition `runs`:
/// `insertions + no_feasible + hop_too_slow + safety_violations +
/// internal_errors = runs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub runs: u64,
    pub insertions: u64,
    pub no_feasible: u64,
    pub hop_too_slow: u64,
    pub safety_violations: u64,
    pub oracle_disagreements: u64,
    pub internal_errors: u64,
    /// `hop_histogram[k]` counts successful insertions that used k hops.
    pub hop_histogram: Vec<u64>,
    /// Worst pairwise separation seen across all completed runs; `None` when
    /// no completed run had two vehicles.
    pub min_pairwise: Option<f64>,
    /// Reproduction bundle for the first planner/oracle mismatch, if any.
    pub first_disagreement: Option<String>,
    /// Description of the first safety abort, if any.
    pub first_safety_violation: Option<String>,
}

/// Runs `params.runs` randomized scenarios derived from `base`: the ring
/// phase is uniform over (0, 2π], each slot is occupied with probability ½
/// (re-opening one slot at random if all land occupied), and everything else
/// comes from `base`. Run `i` uses seed `params.seed + i`, so any single run
/// can be reproduced alone.
///
/// Each run first compares [`plan_insertion`] against [`oracle_plan`] on the
/// ring state at the lane exit, then executes the full simulation. Planner
/// failures and safety aborts are counted, not propagated — the point of a
/// sweep is to report them. Only an invalid base design is an error.
pub fn sweep(base: &ScenarioConfig, params: &SweepParams) -> Result<SweepOutcome, SimError> {
    let violations = validate_design(&base.corridor);
    if !violations.is_empty() {
        return Err(SimError::InvalidDesign(violations));
    }
    let n = base.corridor.n_slots;
    let mut outcome = SweepOutcome {
        runs: params.runs,
        insertions: 0,
        no_feasible: 0,
        hop_too_slow: 0,
        safety_violations: 0,
        oracle_disagreements: 0,
        internal_errors: 0,
        hop_histogram: vec![0; n as usize],
        min_pairwise: None,
        first_disagreement: None,
        first_safety_violation: None,
    };

    for i in 0..params.runs {
        let run_seed = params.seed.wrapping_add(i);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let phase = rng.random_range(0.0..TAU);
        let mut occupied: Vec<u32> = (1..=n).filter(|_| rng.random_bool(0.5)).collect();
        if occupied.len() == n as usize {
            occupied.remove(rng.random_range(0..n) as usize);
        }

        let mut scenario = base.clone();
        scenario.ring.phase_offset = phase;
        scenario.ring.occupied_slots = occupied;
        scenario.run.dt = params.dt.unwrap_or(base.run.dt);
        scenario.run.duration_after_insertion = SWEEP_TAIL_S;
        scenario.run.seed = run_seed;

        // Planner-versus-oracle on the exact ring state the run will plan on.
        let config = &scenario.corridor;
        let window = feasibility_window(config);
        let t_e = scenario.entry.offset / scenario.entry.speed;
        let ring = SlotRing::new(config, phase, &scenario.ring.occupied_slots)
            .expect("generated slot numbers are in range");
        let timing = classify_slots(&advance(&ring, t_e), &window, config);
        let planned = plan_insertion(&timing, &window, config);
        let reference = oracle_plan(&timing, &window, config);
        if planned != reference {
            outcome.oracle_disagreements += 1;
            if outcome.first_disagreement.is_none() {
                outcome.first_disagreement = Some(format!(
                    "seed {run_seed}: planner {planned:?} vs oracle {reference:?}\nscenario:\n{}",
                    scenario.to_toml_string()
                ));
            }
        }

        match run_scenario(&scenario) {
            Ok(trace) => {
                outcome.insertions += 1;
                outcome.hop_histogram[trace.metrics.hop_count as usize] += 1;
                if let Some(p) = trace.metrics.pairwise_min {
                    if outcome.min_pairwise.is_none_or(|m| p < m) {
                        outcome.min_pairwise = Some(p);
                    }
                }
            }
            Err(SimError::Plan(PlanError::NoFeasibleSlot)) => outcome.no_feasible += 1,
            Err(SimError::Plan(PlanError::HopTooSlow { .. })) => outcome.hop_too_slow += 1,
            Err(e @ SimError::SafetyViolation { .. }) => {
                outcome.safety_violations += 1;
                if outcome.first_safety_violation.is_none() {
                    outcome.first_safety_violation = Some(format!("seed {run_seed}: {e}"));
                }
            }
            Err(_) => outcome.internal_errors += 1,
        }
    }
    Ok(outcome)
}
