//! Experiment configuration file.
//!
//! A single JSON document with sections `room`, `channel`, `ris`, `track`,
//! `scenario`, `optimizer` and `experiment`. Every field has a default, so
//! `{}` describes the reference case study: a 10 × 10 × 3 m room, one 1 W LED
//! with a 60° semi-angle, 16 blockers, 500 instances of 10 slots.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{LinkBudget, NoiseModel, PhotoDetector, RateFormula, RisLayout};
use crate::montecarlo::SystemModel;
use crate::scenario::{Room, ScenarioConfig, TrackAnchoring, TrackConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub transmit_power_w: f64,
    pub semi_angle_deg: f64,
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    pub responsivity: f64,
    pub filter_gain: f64,
    pub refractive_index: f64,
    pub thermal_psd: f64,
    pub bandwidth_hz: f64,
    pub rate_formula: RateFormula,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let d = PhotoDetector::default();
        let n = NoiseModel::default();
        ChannelConfig {
            transmit_power_w: 1.0,
            semi_angle_deg: 60.0,
            pd_area_m2: d.pd_area_m2,
            fov_deg: d.fov_deg,
            responsivity: d.responsivity,
            filter_gain: d.filter_gain,
            refractive_index: d.refractive_index,
            thermal_psd: n.thermal_psd,
            bandwidth_hz: n.bandwidth_hz,
            rate_formula: RateFormula::default(),
        }
    }
}

impl ChannelConfig {
    pub fn detector(&self) -> PhotoDetector {
        PhotoDetector {
            pd_area_m2: self.pd_area_m2,
            fov_deg: self.fov_deg,
            responsivity: self.responsivity,
            filter_gain: self.filter_gain,
            refractive_index: self.refractive_index,
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            thermal_psd: self.thermal_psd,
            bandwidth_hz: self.bandwidth_hz,
        }
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            transmit_power_w: self.transmit_power_w,
            semi_angle_deg: self.semi_angle_deg,
            detector: self.detector(),
            noise: self.noise(),
            formula: self.rate_formula,
        }
    }
}

/// Sine-cosine search settings used for every mirror.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub population: usize,
    pub iterations: usize,
    /// Initial step amplitude, decayed linearly to zero.
    pub amplitude: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population: 30,
            iterations: 100,
            amplitude: 2.0,
        }
    }
}

/// Models, replication and sweep values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSettings {
    pub models: Vec<SystemModel>,
    pub instances: usize,
    pub master_seed: u64,
    pub power_values_w: Vec<f64>,
    pub blocker_counts: Vec<usize>,
    pub blocker_sweep_power_w: f64,
    pub grid_resolutions: Vec<usize>,
    pub grid_anchoring: TrackAnchoring,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        CampaignSettings {
            models: SystemModel::ALL.to_vec(),
            instances: 500,
            master_seed: 20_250_101,
            power_values_w: (1..=8).map(|k| 0.5 * k as f64).collect(),
            blocker_counts: vec![1, 2, 4, 8, 16, 32],
            blocker_sweep_power_w: 2.0,
            grid_resolutions: vec![5, 10, 20, 50, 100],
            grid_anchoring: TrackAnchoring::CellCentered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub room: Room,
    pub channel: ChannelConfig,
    pub ris: RisLayout,
    pub track: TrackConfig,
    pub scenario: ScenarioConfig,
    pub optimizer: OptimizerConfig,
    pub experiment: CampaignSettings,
}

/// A single failed invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub section: &'static str,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.section, self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at `{field}` (line {line}, column {column}): {message}")]
    Parse {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} invariant violation(s):\n  {}", .0.len(), .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<Violation>),
}

/// SHA-256 of raw bytes as lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn check(&mut self, ok: bool, section: &'static str, field: &'static str, message: impl Into<String>) {
        if !ok {
            self.out.push(Violation {
                section,
                field,
                message: message.into(),
            });
        }
    }

    fn positive(&mut self, section: &'static str, field: &'static str, v: f64) {
        self.check(
            v.is_finite() && v > 0.0,
            section,
            field,
            format!("must be positive, got {v}"),
        );
    }
}

impl ExperimentConfig {
    /// Parses without validating.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                field,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })
    }

    /// Reads, parses and validates a config file. Returns the config and the
    /// hash of the file content.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let cfg = Self::from_json_str(&text)?;
        cfg.validate_strict()?;
        Ok((cfg, content_hash(&bytes)))
    }

    pub fn validate_strict(&self) -> Result<(), ConfigError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// Hash of the canonical serialization of the effective config.
    pub fn canonical_hash(&self) -> String {
        content_hash(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    /// Every violated invariant, in section order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut c = Checker { out: Vec::new() };

        let room = &self.room;
        c.positive("room", "width", room.width);
        c.positive("room", "depth", room.depth);
        c.positive("room", "height", room.height);

        let ch = &self.channel;
        c.positive("channel", "transmit_power_w", ch.transmit_power_w);
        c.check(
            ch.semi_angle_deg > 0.0 && ch.semi_angle_deg < 90.0,
            "channel",
            "semi_angle_deg",
            format!("must lie in (0°, 90°), got {}", ch.semi_angle_deg),
        );
        c.positive("channel", "pd_area_m2", ch.pd_area_m2);
        c.check(
            ch.fov_deg > 0.0 && ch.fov_deg <= 90.0,
            "channel",
            "fov_deg",
            format!("FoV must lie in (0°, 90°], got {}", ch.fov_deg),
        );
        c.positive("channel", "responsivity", ch.responsivity);
        c.positive("channel", "filter_gain", ch.filter_gain);
        c.positive("channel", "refractive_index", ch.refractive_index);
        c.positive("channel", "thermal_psd", ch.thermal_psd);
        c.positive("channel", "bandwidth_hz", ch.bandwidth_hz);

        let ris = &self.ris;
        c.check(ris.rows >= 1, "ris", "rows", "must be at least 1");
        c.check(ris.cols >= 1, "ris", "cols", "must be at least 1");
        c.positive("ris", "mirror_size_m", ris.mirror_size_m);
        c.check(
            (0.0..=1.0).contains(&ris.reflectivity),
            "ris",
            "reflectivity",
            format!("must lie in [0, 1], got {}", ris.reflectivity),
        );
        c.check(
            ris.max_tilt_deg > 0.0 && ris.max_tilt_deg < 90.0,
            "ris",
            "max_tilt_deg",
            format!("must lie in (0°, 90°), got {}", ris.max_tilt_deg),
        );
        let array_w = ris.cols as f64 * ris.mirror_size_m;
        let array_h = ris.rows as f64 * ris.mirror_size_m;
        c.check(
            array_w <= room.width.min(room.depth) + 1e-9,
            "ris",
            "cols",
            format!("array width {array_w} m exceeds the shortest wall"),
        );
        c.check(
            ris.center_height_m - array_h / 2.0 >= -1e-9 && ris.center_height_m + array_h / 2.0 <= room.height + 1e-9,
            "ris",
            "center_height_m",
            format!(
                "array of height {array_h} m centered at {} m leaves the wall",
                ris.center_height_m
            ),
        );
        let mut walls = ris.walls.clone();
        walls.sort_by_key(|w| w.name());
        walls.dedup();
        c.check(walls.len() == ris.walls.len(), "ris", "walls", "duplicate wall");

        let tr = &self.track;
        let min = tr.layout.min_resolution(tr.anchoring);
        c.check(
            tr.resolution >= min,
            "track",
            "resolution",
            format!(
                "{:?} layout needs resolution >= {min}, got {}",
                tr.layout, tr.resolution
            ),
        );

        let sc = &self.scenario;
        c.check(sc.slots >= 1, "scenario", "slots", "must be at least 1");
        c.positive("scenario", "slot_duration_s", sc.slot_duration_s);
        c.positive("scenario", "speed_min_mps", sc.speed_min_mps);
        c.check(
            sc.speed_max_mps >= sc.speed_min_mps && sc.speed_max_mps.is_finite(),
            "scenario",
            "speed_max_mps",
            "must be finite and not below speed_min_mps",
        );
        c.positive("scenario", "body_diameter_m", sc.body_diameter_m);
        c.positive("scenario", "body_height_m", sc.body_height_m);
        c.check(
            sc.device_height_m > 0.0 && sc.device_height_m < room.height,
            "scenario",
            "device_height_m",
            "must lie strictly between floor and ceiling",
        );
        c.check(
            sc.device_offset_m > sc.body_diameter_m / 2.0,
            "scenario",
            "device_offset_m",
            "device must be held outside the body cylinder",
        );
        c.check(
            sc.edge_margin_m >= sc.device_offset_m && 2.0 * sc.edge_margin_m < room.width.min(room.depth),
            "scenario",
            "edge_margin_m",
            "must keep the device inside the room and leave walkable floor",
        );
        c.check(
            sc.orientation.is_valid(),
            "scenario",
            "orientation",
            format!(
                "polar support [{}, {}]° must be an ordered range inside [0°, 90°]",
                sc.orientation.polar_min_deg, sc.orientation.polar_max_deg
            ),
        );

        let op = &self.optimizer;
        c.check(op.population >= 2, "optimizer", "population", "must be at least 2");
        c.check(op.iterations >= 1, "optimizer", "iterations", "must be at least 1");
        c.positive("optimizer", "amplitude", op.amplitude);

        let ex = &self.experiment;
        c.check(!ex.models.is_empty(), "experiment", "models", "at least one model");
        c.check(ex.instances >= 1, "experiment", "instances", "must be at least 1");
        c.check(
            !ex.power_values_w.is_empty() && ex.power_values_w.iter().all(|p| p.is_finite() && *p > 0.0),
            "experiment",
            "power_values_w",
            "must be a non-empty list of positive powers",
        );
        c.check(
            !ex.blocker_counts.is_empty(),
            "experiment",
            "blocker_counts",
            "must be non-empty",
        );
        c.positive("experiment", "blocker_sweep_power_w", ex.blocker_sweep_power_w);
        let grid_min = crate::scenario::TrackLayout::Grid.min_resolution(ex.grid_anchoring);
        c.check(
            !ex.grid_resolutions.is_empty() && ex.grid_resolutions.iter().all(|&r| r >= grid_min),
            "experiment",
            "grid_resolutions",
            format!("must be non-empty with every resolution >= {grid_min}"),
        );

        c.out
    }
}
