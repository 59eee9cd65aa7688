//! The rotating slot ring and per-slot arrival timing.
//!
//! Slots are numbered 1..=N. Slot angles are measured from the insertion point
//! (the transit-lane tangent point), increasing along the rotation direction,
//! and live in the half-open-from-above interval (0, 2π]: a slot exactly at
//! the insertion point is reported as 2π, one full turn away.

use crate::geometry::{CorridorConfig, FeasibilityWindow};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Maps any angle into (0, 2π]. Multiples of 2π map to 2π, not 0.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r == 0.0 {
        TAU
    } else {
        r
    }
}

/// N equiangular slots rotating at constant angular rate.
///
/// The ring stores the slot-1 angle at its epoch plus elapsed time and
/// recomputes each slot angle on demand, so slot spacing stays exactly
/// equiangular for any horizon — there is no accumulating per-step drift.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRing {
    n_slots: u32,
    omega: f64,
    base: f64,
    elapsed: f64,
    occupied: Vec<bool>,
}

/// Serialized state of one slot, as stored in ring-snapshot files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotSnapshot {
    pub index: u32,
    pub gamma_rad: f64,
    pub occupied: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlotError {
    #[error("slot index {index} out of range 1..={n_slots}")]
    IndexOutOfRange { index: u32, n_slots: u32 },
    #[error("snapshot has {got} slots, config says {expected}")]
    WrongSlotCount { expected: u32, got: usize },
    #[error("snapshot slot indices must be exactly 1..={0} in order")]
    BadIndexSequence(u32),
    #[error(
        "snapshot angles are not equiangular: slot {index} is {got} rad, expected {expected} rad"
    )]
    NotEquiangular { index: u32, expected: f64, got: f64 },
}

/// Per-slot arrival times and their classification against a window.
///
/// `s_f` = feasible slots, `s_uf` = feasible and unoccupied, `s_of` = feasible
/// and occupied, `s_e` = unoccupied regardless of feasibility; `s_uf` and
/// `s_of` partition `s_f`. Every list is ascending by arrival time and each
/// `s_*` list is index-aligned with its `t_*` list.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTiming {
    /// Arrival time of each slot, indexed by slot number − 1.
    pub t_arrival: Vec<f64>,
    /// Whether each slot's arrival time falls inside the closed window.
    pub feasible: Vec<bool>,
    /// Feasible slots, ascending by arrival time.
    pub s_f: Vec<u32>,
    pub t_f: Vec<f64>,
    /// Feasible and unoccupied.
    pub s_uf: Vec<u32>,
    pub t_uf: Vec<f64>,
    /// Feasible and occupied.
    pub s_of: Vec<u32>,
    pub t_of: Vec<f64>,
    /// Unoccupied (any arrival time).
    pub s_e: Vec<u32>,
    pub t_e: Vec<f64>,
}

impl SlotRing {
    /// Builds a ring from the slot-1 angle and the set of occupied slot
    /// numbers. Rejects out-of-range slot numbers; duplicates are harmless.
    pub fn new(
        config: &CorridorConfig,
        slot1_gamma: f64,
        occupied_slots: &[u32],
    ) -> Result<Self, SlotError> {
        let n = config.n_slots;
        let mut occupied = vec![false; n as usize];
        for &index in occupied_slots {
            if index < 1 || index > n {
                return Err(SlotError::IndexOutOfRange { index, n_slots: n });
            }
            occupied[(index - 1) as usize] = true;
        }
        Ok(SlotRing {
            n_slots: n,
            omega: config.omega(),
            base: normalize_angle(slot1_gamma),
            elapsed: 0.0,
            occupied,
        })
    }

    /// Rebuilds a ring from per-slot snapshots, checking that the angles are
    /// consistent with one equiangular ring (within `1e-9` rad).
    pub fn from_slots(config: &CorridorConfig, slots: &[SlotSnapshot]) -> Result<Self, SlotError> {
        let n = config.n_slots;
        if slots.len() != n as usize {
            return Err(SlotError::WrongSlotCount {
                expected: n,
                got: slots.len(),
            });
        }
        for (i, s) in slots.iter().enumerate() {
            if s.index != i as u32 + 1 {
                return Err(SlotError::BadIndexSequence(n));
            }
        }
        let base = normalize_angle(slots[0].gamma_rad);
        let alpha = config.alpha();
        for (i, s) in slots.iter().enumerate() {
            let expected = normalize_angle(base + alpha * i as f64);
            let got = normalize_angle(s.gamma_rad);
            // Compare as angles: 2π and just-above-0 are one tolerance apart.
            let diff = (expected - got).abs();
            let diff = diff.min(TAU - diff);
            if diff > 1e-9 {
                return Err(SlotError::NotEquiangular {
                    index: s.index,
                    expected,
                    got,
                });
            }
        }
        let occupied = slots.iter().map(|s| s.occupied).collect();
        Ok(SlotRing {
            n_slots: n,
            omega: config.omega(),
            base,
            elapsed: 0.0,
            occupied,
        })
    }

    pub fn n_slots(&self) -> u32 {
        self.n_slots
    }

    /// Current angle of slot `index` (1-based), in (0, 2π].
    pub fn gamma(&self, index: u32) -> f64 {
        assert!(
            index >= 1 && index <= self.n_slots,
            "slot index {index} out of range 1..={}",
            self.n_slots
        );
        let alpha = TAU / self.n_slots as f64;
        normalize_angle(self.base + alpha * (index - 1) as f64 + self.omega * self.elapsed)
    }

    /// Current angles of all slots, indexed by slot number − 1.
    pub fn gammas(&self) -> Vec<f64> {
        (1..=self.n_slots).map(|i| self.gamma(i)).collect()
    }

    pub fn is_occupied(&self, index: u32) -> bool {
        assert!(
            index >= 1 && index <= self.n_slots,
            "slot index {index} out of range 1..={}",
            self.n_slots
        );
        self.occupied[(index - 1) as usize]
    }

    pub fn set_occupied(&mut self, index: u32, occupied: bool) {
        assert!(
            index >= 1 && index <= self.n_slots,
            "slot index {index} out of range 1..={}",
            self.n_slots
        );
        self.occupied[(index - 1) as usize] = occupied;
    }

    pub fn occupied_count(&self) -> u32 {
        self.occupied.iter().filter(|&&o| o).count() as u32
    }

    /// Rotates the ring in place by `dt` seconds.
    pub(crate) fn tick(&mut self, dt: f64) {
        self.elapsed += dt;
    }

    /// Snapshot of the current per-slot state, index order.
    pub fn snapshot(&self) -> Vec<SlotSnapshot> {
        (1..=self.n_slots)
            .map(|i| SlotSnapshot {
                index: i,
                gamma_rad: self.gamma(i),
                occupied: self.occupied[(i - 1) as usize],
            })
            .collect()
    }
}

/// Returns the ring rotated forward by `dt` seconds.
pub fn advance(ring: &SlotRing, dt: f64) -> SlotRing {
    let mut next = ring.clone();
    next.tick(dt);
    next
}

/// Time for a slot at angle `gamma` to rotate to the insertion point:
/// `(2π − gamma) · r_loiter / v_loiter`. A slot at 2π arrives at t = 0; the
/// result decreases strictly as the slot closes on the insertion point.
pub fn slot_arrival_time(gamma: f64, config: &CorridorConfig) -> f64 {
    (TAU - normalize_angle(gamma)) * config.r_loiter / config.v_loiter()
}

/// Computes every slot's arrival time and classifies it against the window.
///
/// Feasibility here uses the closed interval `[t_min, t_max]`: a slot arriving
/// exactly at a window endpoint is still classified feasible. (The planner
/// applies its own strict comparison when it selects the target.)
pub fn classify_slots(
    ring: &SlotRing,
    window: &FeasibilityWindow,
    config: &CorridorConfig,
) -> SlotTiming {
    let n = ring.n_slots();
    let t_arrival: Vec<f64> = (1..=n)
        .map(|i| slot_arrival_time(ring.gamma(i), config))
        .collect();
    let feasible: Vec<bool> = t_arrival
        .iter()
        .map(|&t| t >= window.t_min && t <= window.t_max)
        .collect();

    let mut order: Vec<u32> = (1..=n).collect();
    order.sort_by(|&a, &b| {
        t_arrival[(a - 1) as usize]
            .partial_cmp(&t_arrival[(b - 1) as usize])
            .expect("arrival times are finite")
    });

    let mut timing = SlotTiming {
        t_arrival,
        feasible,
        s_f: Vec::new(),
        t_f: Vec::new(),
        s_uf: Vec::new(),
        t_uf: Vec::new(),
        s_of: Vec::new(),
        t_of: Vec::new(),
        s_e: Vec::new(),
        t_e: Vec::new(),
    };
    for i in order {
        let t = timing.t_arrival[(i - 1) as usize];
        let occ = ring.is_occupied(i);
        if timing.feasible[(i - 1) as usize] {
            timing.s_f.push(i);
            timing.t_f.push(t);
            if occ {
                timing.s_of.push(i);
                timing.t_of.push(t);
            } else {
                timing.s_uf.push(i);
                timing.t_uf.push(t);
            }
        }
        if !occ {
            timing.s_e.push(i);
            timing.t_e.push(t);
        }
    }
    timing
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case2() -> CorridorConfig {
        CorridorConfig {
            n_slots: 6,
            v_min: 15.0,
            v_max: 35.0,
            v_loiter_override: None,
            r_loiter: 100.0,
            r_transit: 80.0,
            d_lane: 300.0,
            d_safe: 50.0,
        }
    }

    #[test]
    fn normalize_maps_zero_to_full_turn() {
        assert_eq!(normalize_angle(0.0), TAU);
        assert_eq!(normalize_angle(TAU), TAU);
        assert_eq!(normalize_angle(-TAU), TAU);
        assert_eq!(normalize_angle(1.0), 1.0);
        assert!((normalize_angle(TAU + 1.0) - 1.0).abs() < 1e-12);
        assert!((normalize_angle(-1.0) - (TAU - 1.0)).abs() < 1e-12);
        let g = normalize_angle(-3.0 * TAU + 2.5);
        assert!((g - 2.5).abs() < 1e-12);
    }

    #[test]
    fn ring_angles_are_equiangular_and_ordered_from_base() {
        let cfg = case2();
        let ring = SlotRing::new(&cfg, 0.4, &[]).unwrap();
        let alpha = cfg.alpha();
        for i in 1..=6u32 {
            let expected = normalize_angle(0.4 + alpha * (i - 1) as f64);
            assert!((ring.gamma(i) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_rejects_bad_occupied_index() {
        let cfg = case2();
        assert_eq!(
            SlotRing::new(&cfg, 0.0, &[7]),
            Err(SlotError::IndexOutOfRange {
                index: 7,
                n_slots: 6
            })
        );
        assert_eq!(
            SlotRing::new(&cfg, 0.0, &[0]),
            Err(SlotError::IndexOutOfRange {
                index: 0,
                n_slots: 6
            })
        );
    }

    #[test]
    fn advance_rotates_by_omega_dt_and_preserves_gaps() {
        let cfg = case2();
        let ring = SlotRing::new(&cfg, 1.0, &[2, 5]).unwrap();
        let dt = 3.7;
        let next = advance(&ring, dt);
        let omega = cfg.omega();
        for i in 1..=6u32 {
            let expected = normalize_angle(ring.gamma(i) + omega * dt);
            let got = next.gamma(i);
            let diff = (expected - got).abs();
            assert!(diff.min(TAU - diff) < 1e-12, "slot {i}");
            assert_eq!(ring.is_occupied(i), next.is_occupied(i));
        }
        // Original is untouched.
        assert!((ring.gamma(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_horizon_advance_keeps_exact_equiangular_spacing() {
        let cfg = case2();
        let mut ring = SlotRing::new(&cfg, 0.123, &[]).unwrap();
        // 10^5 ticks of an awkward dt: spacing must stay exact, not drift.
        for _ in 0..100_000 {
            ring.tick(0.0173);
        }
        let alpha = cfg.alpha();
        let g = ring.gammas();
        for i in 0..6 {
            let gap = normalize_angle(g[(i + 1) % 6] - g[i]);
            assert!(
                (gap - alpha).abs() < 1e-9,
                "gap {i} drifted: {gap} vs {alpha}"
            );
        }
    }

    #[test]
    fn arrival_time_reference_points() {
        let cfg = case2();
        // v_loiter = 15, r = 100. A slot at the insertion point (2π) arrives now.
        assert_eq!(slot_arrival_time(TAU, &cfg), 0.0);
        assert_eq!(slot_arrival_time(0.0, &cfg), 0.0);
        // Half a turn away: π · 100 / 15.
        assert!((slot_arrival_time(std::f64::consts::PI, &cfg) - 20.943951023931955).abs() < 1e-12);
    }

    #[test]
    fn arrival_time_exact_at_constructed_boundary() {
        // gamma = 2π − 1.5 gives t = 1.5 · 200 / 15 = 20 exactly in f64:
        // TAU − (TAU − 1.5) is exact by Sterbenz, and 1.5·200/15 has no
        // rounding. Guards the closed-window boundary below.
        let cfg = CorridorConfig {
            r_loiter: 200.0,
            ..case2()
        };
        let gamma = TAU - 1.5;
        assert_eq!(slot_arrival_time(gamma, &cfg), 20.0);
    }

    #[test]
    fn classification_partitions_and_sorts() {
        let cfg = case2();
        let window = crate::geometry::feasibility_window(&cfg);
        let ring = SlotRing::new(&cfg, 2.2, &[1, 4]).unwrap();
        let timing = classify_slots(&ring, &window, &cfg);

        assert_eq!(timing.t_arrival.len(), 6);
        assert_eq!(timing.s_f.len(), timing.s_uf.len() + timing.s_of.len());
        assert_eq!(timing.s_e.len(), 4);
        for list in [&timing.t_f, &timing.t_uf, &timing.t_of, &timing.t_e] {
            assert!(list.windows(2).all(|w| w[0] <= w[1]), "list not ascending");
        }
        // Index alignment.
        for (s, t) in timing.s_uf.iter().zip(&timing.t_uf) {
            assert_eq!(timing.t_arrival[(*s - 1) as usize], *t);
            assert!(!ring.is_occupied(*s));
            assert!(timing.feasible[(*s - 1) as usize]);
        }
        for (s, t) in timing.s_of.iter().zip(&timing.t_of) {
            assert_eq!(timing.t_arrival[(*s - 1) as usize], *t);
            assert!(ring.is_occupied(*s));
        }
        for s in 1..=6u32 {
            let in_uf = timing.s_uf.contains(&s);
            let in_of = timing.s_of.contains(&s);
            let in_f = timing.s_f.contains(&s);
            assert_eq!(in_f, in_uf || in_of);
            assert!(!(in_uf && in_of));
            assert_eq!(timing.s_e.contains(&s), !ring.is_occupied(s));
        }
    }

    #[test]
    fn classification_window_boundaries_are_inclusive() {
        // Window [20, 40]; slots pinned exactly on each endpoint.
        let cfg = CorridorConfig {
            r_loiter: 200.0,
            ..case2()
        };
        let window = FeasibilityWindow {
            phi: 0.0,
            psi: 0.0,
            t_min: 20.0,
            t_max: 40.0,
        };
        let at_tmin = SlotRing::new(&cfg, TAU - 1.5, &[]).unwrap();
        let timing = classify_slots(&at_tmin, &window, &cfg);
        assert_eq!(timing.t_arrival[0], 20.0);
        assert!(timing.feasible[0]);

        let at_tmax = SlotRing::new(&cfg, TAU - 3.0, &[]).unwrap();
        let timing = classify_slots(&at_tmax, &window, &cfg);
        assert_eq!(timing.t_arrival[0], 40.0);
        assert!(timing.feasible[0]);
    }

    #[test]
    fn snapshot_round_trip() {
        let cfg = case2();
        let ring = SlotRing::new(&cfg, 0.9, &[3, 6]).unwrap();
        let ring = advance(&ring, 4.2);
        let snap = ring.snapshot();
        let back = SlotRing::from_slots(&cfg, &snap).unwrap();
        for i in 1..=6u32 {
            assert!((back.gamma(i) - ring.gamma(i)).abs() < 1e-12);
            assert_eq!(back.is_occupied(i), ring.is_occupied(i));
        }
    }

    #[test]
    fn from_slots_rejects_malformed_snapshots() {
        let cfg = case2();
        let ring = SlotRing::new(&cfg, 0.9, &[]).unwrap();
        let mut snap = ring.snapshot();
        snap.pop();
        assert!(matches!(
            SlotRing::from_slots(&cfg, &snap),
            Err(SlotError::WrongSlotCount { .. })
        ));

        let mut snap = ring.snapshot();
        snap[2].gamma_rad += 0.01;
        assert!(matches!(
            SlotRing::from_slots(&cfg, &snap),
            Err(SlotError::NotEquiangular { .. })
        ));

        let mut snap = ring.snapshot();
        snap.swap(0, 1);
        assert!(matches!(
            SlotRing::from_slots(&cfg, &snap),
            Err(SlotError::BadIndexSequence(_))
        ));
    }

    #[test]
    fn snapshot_json_shape() {
        let snap = SlotSnapshot {
            index: 3,
            gamma_rad: 1.25,
            occupied: true,
        };
        let text = serde_json::to_string(&snap).unwrap();
        assert_eq!(text, r#"{"index":3,"gamma_rad":1.25,"occupied":true}"#);
    }
}
