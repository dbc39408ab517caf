//! Sampled world states: room, ceiling track, user trajectory and blockers.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::geometry::{sample_device_orientation, CylinderBlocker, OrientationModel, Pose, Vec3};
use crate::seeding::{stream_rng, Stream};

/// Attempts per blocker before giving up on rejection sampling.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("could not place blocker {index} of {requested} after {attempts} attempts; the room is too crowded")]
    Overcrowded {
        index: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("{layout:?} track needs at least {min} points, got {requested}")]
    TrackResolution {
        layout: TrackLayout,
        requested: usize,
        min: usize,
    },
    #[error("a corner-to-center path needs at least 2 slots, got {0}")]
    TooFewSlots(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl Default for Room {
    fn default() -> Self {
        Room {
            width: 10.0,
            depth: 10.0,
            height: 3.0,
        }
    }
}

impl Room {
    /// Fixed AP mounting point.
    pub fn ceiling_center(&self) -> Vec3 {
        Vec3::new(self.width / 2.0, self.depth / 2.0, self.height)
    }

    pub fn contains_footprint(&self, p: Vec3) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.depth).contains(&p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackLayout {
    #[default]
    Grid,
    Linear,
    TShape,
    UShape,
    Circular,
}

/// How grid points are laid out across the ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackAnchoring {
    /// `r × r` points at the centers of equal cells.
    #[default]
    CellCentered,
    /// `r × r` points at `(i·W/(r−1), j·D/(r−1))`, walls included. Refining
    /// `r → 2r − 1` keeps every existing point.
    CornerInclusive,
}

impl TrackLayout {
    pub fn min_resolution(self, anchoring: TrackAnchoring) -> usize {
        match (self, anchoring) {
            (TrackLayout::Grid, TrackAnchoring::CornerInclusive) => 2,
            (TrackLayout::Grid, _) | (TrackLayout::Linear, _) => 1,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackConfig {
    pub layout: TrackLayout,
    /// Points per side for grids, total points for the other layouts.
    pub resolution: usize,
    pub anchoring: TrackAnchoring,
    /// Append the ceiling center as an extra candidate.
    pub include_center: bool,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            layout: TrackLayout::Grid,
            resolution: 10,
            anchoring: TrackAnchoring::CellCentered,
            include_center: false,
        }
    }
}

/// Candidate MAP positions on the ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackGrid {
    pub layout: TrackLayout,
    pub candidate_points: Vec<Vec3>,
}

impl TrackGrid {
    pub fn len(&self) -> usize {
        self.candidate_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidate_points.is_empty()
    }

    pub fn from_config(cfg: &TrackConfig, room: &Room) -> Result<TrackGrid, ScenarioError> {
        let mut track = build_track(cfg.layout, room, cfg.resolution, cfg.anchoring)?;
        if cfg.include_center {
            track.candidate_points.push(room.ceiling_center());
        }
        Ok(track)
    }
}

/// Places candidate points for `layout` on the ceiling of `room`.
///
/// Curved and polyline layouts are inset from the walls by a twentieth of
/// the shorter room side and sampled at equal arc-length spacing.
pub fn build_track(
    layout: TrackLayout,
    room: &Room,
    resolution: usize,
    anchoring: TrackAnchoring,
) -> Result<TrackGrid, ScenarioError> {
    let min = layout.min_resolution(anchoring);
    if resolution < min {
        return Err(ScenarioError::TrackResolution {
            layout,
            requested: resolution,
            min,
        });
    }
    let (w, d, h) = (room.width, room.depth, room.height);
    let inset = w.min(d) / 20.0;
    let points = match layout {
        TrackLayout::Grid => {
            let r = resolution;
            let mut pts = Vec::with_capacity(r * r);
            for i in 0..r {
                for j in 0..r {
                    let (x, y) = match anchoring {
                        TrackAnchoring::CellCentered => {
                            ((i as f64 + 0.5) * w / r as f64, (j as f64 + 0.5) * d / r as f64)
                        }
                        TrackAnchoring::CornerInclusive => {
                            ((i as f64 * w) / (r - 1) as f64, (j as f64 * d) / (r - 1) as f64)
                        }
                    };
                    pts.push(Vec3::new(x, y, h));
                }
            }
            pts
        }
        TrackLayout::Linear => sample_polyline(&[(inset, d / 2.0), (w - inset, d / 2.0)], resolution, h),
        TrackLayout::TShape => {
            let bar = (w - 2.0 * inset).max(0.0);
            let stem = (d - 2.0 * inset).max(0.0);
            // bar first, then the stem hanging from its midpoint
            let n_bar = ((resolution as f64) * bar / (bar + stem))
                .round()
                .clamp(1.0, resolution as f64 - 1.0) as usize;
            let mut pts = sample_polyline(&[(inset, d - inset), (w - inset, d - inset)], n_bar, h);
            pts.extend(sample_polyline(
                &[(w / 2.0, d - inset), (w / 2.0, inset)],
                resolution - n_bar,
                h,
            ));
            pts
        }
        TrackLayout::UShape => sample_polyline(
            &[
                (inset, d - inset),
                (inset, inset),
                (w - inset, inset),
                (w - inset, d - inset),
            ],
            resolution,
            h,
        ),
        TrackLayout::Circular => {
            let radius = w.min(d) / 2.0 - inset;
            (0..resolution)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / resolution as f64;
                    Vec3::new(w / 2.0 + radius * a.cos(), d / 2.0 + radius * a.sin(), h)
                })
                .collect()
        }
    };
    Ok(TrackGrid {
        layout,
        candidate_points: points,
    })
}

/// `n` points at the midpoints of equal arc-length pieces of the polyline.
fn sample_polyline(vertices: &[(f64, f64)], n: usize, z: f64) -> Vec<Vec3> {
    let seg_len: Vec<f64> = vertices
        .windows(2)
        .map(|p| (p[1].0 - p[0].0).hypot(p[1].1 - p[0].1))
        .collect();
    let total: f64 = seg_len.iter().sum();
    (0..n)
        .map(|k| {
            let mut s = (k as f64 + 0.5) * total / n as f64;
            for (i, &len) in seg_len.iter().enumerate() {
                if s <= len || i == seg_len.len() - 1 {
                    let f = if len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                    let (a, b) = (vertices[i], vertices[i + 1]);
                    return Vec3::new(a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1), z);
                }
                s -= len;
            }
            unreachable!("polyline has at least one segment")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub blockers: usize,
    pub slots: usize,
    pub slot_duration_s: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub body_diameter_m: f64,
    pub body_height_m: f64,
    pub device_height_m: f64,
    /// Horizontal distance from the body axis to the device.
    pub device_offset_m: f64,
    pub orientation: OrientationModel,
    /// Draw a fresh blocker set in every slot instead of once per realization.
    pub resample_blockers_per_slot: bool,
    /// User positions and waypoints keep this distance from the walls.
    pub edge_margin_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            blockers: 16,
            slots: 10,
            slot_duration_s: 1.0,
            speed_min_mps: 0.5,
            speed_max_mps: 2.0,
            body_diameter_m: 0.30,
            body_height_m: 1.65,
            device_height_m: 0.75,
            device_offset_m: 0.36,
            orientation: OrientationModel::default(),
            resample_blockers_per_slot: false,
            edge_margin_m: 0.5,
        }
    }
}

/// User and device state in one time slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub body: CylinderBlocker,
    pub device_position: Vec3,
    pub device_normal: Vec3,
    /// Horizontal unit facing direction.
    pub facing: Vec3,
    /// Speed of the move that brought the user into this slot.
    pub speed: f64,
    pub waypoint: Vec3,
}

impl UserState {
    pub fn position(&self) -> Vec3 {
        self.body.base_center
    }

    pub fn device_pose(&self) -> Pose {
        Pose {
            position: self.device_position,
            boresight: self.device_normal,
        }
    }
}

/// One sampled world over all time slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRealization {
    pub room: Room,
    pub track: TrackGrid,
    pub user_states: Vec<UserState>,
    /// Non-user blockers, static over the realization.
    pub blockers: Vec<CylinderBlocker>,
    /// Per-slot blocker sets when resampling per slot is enabled.
    pub slot_blockers: Option<Vec<Vec<CylinderBlocker>>>,
    pub seed: u64,
}

impl ScenarioRealization {
    pub fn slots(&self) -> usize {
        self.user_states.len()
    }

    pub fn blockers_at(&self, slot: usize) -> &[CylinderBlocker] {
        match &self.slot_blockers {
            Some(per_slot) => &per_slot[slot],
            None => &self.blockers,
        }
    }

    /// User body followed by every non-user blocker present in `slot`.
    pub fn occluders(&self, slot: usize) -> Vec<CylinderBlocker> {
        let others = self.blockers_at(slot);
        let mut all = Vec::with_capacity(others.len() + 1);
        all.push(self.user_states[slot].body);
        all.extend_from_slice(others);
        all
    }
}

fn uniform_point<R: Rng>(rng: &mut R, room: &Room, margin: f64) -> Vec3 {
    let x = margin + rng.gen::<f64>() * (room.width - 2.0 * margin);
    let y = margin + rng.gen::<f64>() * (room.depth - 2.0 * margin);
    Vec3::new(x, y, 0.0)
}

fn horizontal_unit(azimuth: f64) -> Vec3 {
    Vec3::new(azimuth.cos(), azimuth.sin(), 0.0)
}

fn user_state(
    sc: &ScenarioConfig,
    position: Vec3,
    facing: Vec3,
    device_normal: Vec3,
    speed: f64,
    waypoint: Vec3,
) -> UserState {
    let body = CylinderBlocker::new(position.x, position.y, sc.body_diameter_m, sc.body_height_m);
    let mut device_position = position + facing * sc.device_offset_m;
    device_position.z = sc.device_height_m;
    UserState {
        body,
        device_position,
        device_normal,
        facing,
        speed,
        waypoint,
    }
}

/// Uniform blockers that do not overlap each other or any `clear` user.
///
/// Blockers are drawn sequentially from one stream, so the first `k`
/// blockers of a larger set equal a `k`-blocker draw with the same stream.
fn sample_blockers<R: Rng>(
    rng: &mut R,
    count: usize,
    room: &Room,
    sc: &ScenarioConfig,
    clear: &[UserState],
) -> Result<Vec<CylinderBlocker>, ScenarioError> {
    let r = sc.body_diameter_m / 2.0;
    let mut out: Vec<CylinderBlocker> = Vec::with_capacity(count);
    for index in 0..count {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = uniform_point(rng, room, r);
            let overlaps_user = clear.iter().any(|u| {
                p.horizontal_distance(u.position()) < r + u.body.radius()
                    || p.horizontal_distance(u.device_position) <= r
            });
            let overlaps_blocker = out
                .iter()
                .any(|b| p.horizontal_distance(b.base_center) < r + b.radius());
            if !overlaps_user && !overlaps_blocker {
                out.push(CylinderBlocker::new(p.x, p.y, sc.body_diameter_m, sc.body_height_m));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(ScenarioError::Overcrowded {
                index,
                requested: count,
                attempts: MAX_PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(out)
}

/// Static blockers plus the optional per-slot sets.
type BlockerSets = (Vec<CylinderBlocker>, Option<Vec<Vec<CylinderBlocker>>>);

fn place_blockers(
    cfg: &ExperimentConfig,
    seed: u64,
    users: &[UserState],
    static_clear: &[UserState],
) -> Result<BlockerSets, ScenarioError> {
    let sc = &cfg.scenario;
    if sc.resample_blockers_per_slot {
        let per_slot = users
            .iter()
            .enumerate()
            .map(|(slot, u)| {
                let mut rng = stream_rng(seed, Stream::Blockers, slot as u64);
                sample_blockers(&mut rng, sc.blockers, &cfg.room, sc, std::slice::from_ref(u))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((per_slot[0].clone(), Some(per_slot)))
    } else {
        let mut rng = stream_rng(seed, Stream::Blockers, 0);
        Ok((
            sample_blockers(&mut rng, sc.blockers, &cfg.room, sc, static_clear)?,
            None,
        ))
    }
}

fn orientations(cfg: &ExperimentConfig, seed: u64, n: usize) -> Vec<Vec3> {
    let mut rng = stream_rng(seed, Stream::Orientation, 0);
    (0..n)
        .map(|_| sample_device_orientation(&mut rng, &cfg.scenario.orientation))
        .collect()
}

/// Random-waypoint user with static (or per-slot) blockers.
///
/// The user starts uniformly inside the room, walks toward a uniform
/// waypoint at a speed drawn from `[speed_min, speed_max]`, stops on arrival
/// and draws a new waypoint and speed for the next slot. The device sits in
/// front of the body along the walking direction. Deterministic in
/// `(cfg, seed)`.
pub fn generate_realization(cfg: &ExperimentConfig, seed: u64) -> Result<ScenarioRealization, ScenarioError> {
    let sc = &cfg.scenario;
    let room = cfg.room;
    let track = TrackGrid::from_config(&cfg.track, &room)?;
    let mut rng = stream_rng(seed, Stream::UserPath, 0);
    let margin = sc.edge_margin_m;
    let draw_speed =
        |rng: &mut rand_chacha::ChaCha8Rng| sc.speed_min_mps + rng.gen::<f64>() * (sc.speed_max_mps - sc.speed_min_mps);

    let mut pos = uniform_point(&mut rng, &room, margin);
    let idle_facing = horizontal_unit(2.0 * PI * rng.gen::<f64>());
    let mut waypoint = uniform_point(&mut rng, &room, margin);
    let mut speed = draw_speed(&mut rng);
    let normals = orientations(cfg, seed, sc.slots);

    let mut users = Vec::with_capacity(sc.slots);
    for (slot, &normal) in normals.iter().enumerate() {
        let moved_at = speed;
        if slot > 0 {
            let budget = speed * sc.slot_duration_s;
            let to_go = waypoint - pos;
            let dist = to_go.norm();
            if dist <= budget {
                pos = waypoint;
                waypoint = uniform_point(&mut rng, &room, margin);
                speed = draw_speed(&mut rng);
            } else {
                pos += to_go * (budget / dist);
            }
        }
        let heading = waypoint - pos;
        let facing = if heading.norm() > 1e-9 {
            heading.normalized()
        } else {
            idle_facing
        };
        users.push(user_state(sc, pos, facing, normal, moved_at, waypoint));
    }

    let (blockers, slot_blockers) = place_blockers(cfg, seed, &users, &users[..1.min(users.len())])?;
    Ok(ScenarioRealization {
        room,
        track,
        user_states: users,
        blockers,
        slot_blockers,
        seed,
    })
}

/// User walking in a straight line from the room corner to the center.
///
/// Positions are `slots` evenly spaced points from `(margin, margin)` to the
/// room center; orientations and blockers are sampled as in
/// [`generate_realization`], with blockers kept clear of the whole path.
pub fn corner_to_center_path(cfg: &ExperimentConfig, seed: u64) -> Result<ScenarioRealization, ScenarioError> {
    let sc = &cfg.scenario;
    let n = sc.slots;
    if n < 2 {
        return Err(ScenarioError::TooFewSlots(n));
    }
    let room = cfg.room;
    let track = TrackGrid::from_config(&cfg.track, &room)?;
    let corner = Vec3::new(sc.edge_margin_m, sc.edge_margin_m, 0.0);
    let center = Vec3::new(room.width / 2.0, room.depth / 2.0, 0.0);
    let span = center - corner;
    let facing = span.normalized();
    let step_speed = span.norm() / (n - 1) as f64 / sc.slot_duration_s;
    let normals = orientations(cfg, seed, n);

    let users: Vec<UserState> = normals
        .iter()
        .enumerate()
        .map(|(k, &normal)| {
            let pos = if k == n - 1 {
                center
            } else {
                corner + span * (k as f64 / (n - 1) as f64)
            };
            user_state(sc, pos, facing, normal, step_speed, center)
        })
        .collect();

    let (blockers, slot_blockers) = place_blockers(cfg, seed, &users, &users)?;
    Ok(ScenarioRealization {
        room,
        track,
        user_states: users,
        blockers,
        slot_blockers,
        seed,
    })
}
