//! TOML-backed description of one simulation run: corridor design, initial
//! ring state, incoming-vehicle entry, and integration settings.

use crate::geometry::CorridorConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Initial ring state: which slots hold a UAV and where slot 1 starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingConfig {
    /// Slot numbers (1-based) occupied at scenario start.
    pub occupied_slots: Vec<u32>,
    /// Slot-1 angle at scenario start, measured from the insertion point.
    #[serde(rename = "phase_offset_rad", default)]
    pub phase_offset: f64,
    /// Mirror the whole scenario to a clockwise loiter. Pure reflection of
    /// the output frame; timings and separations are unchanged.
    #[serde(default)]
    pub clockwise: bool,
}

/// Incoming vehicle's start on the main lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryConfig {
    /// Distance from the start position to the lane-exit point, along the lane.
    #[serde(rename = "offset_m")]
    pub offset: f64,
    /// Constant speed held on the main lane.
    #[serde(rename = "speed_mps")]
    pub speed: f64,
}

/// Integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(rename = "dt_s")]
    pub dt: f64,
    /// How long to keep simulating after the incomer occupies its slot.
    #[serde(rename = "duration_after_insertion_s", default)]
    pub duration_after_insertion: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub corridor: CorridorConfig,
    pub ring: RingConfig,
    pub entry: EntryConfig,
    pub run: RunConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
