//! Optical channel gains and link rates.
//!
//! Direct paths use the Lambertian point-source model with a non-imaging
//! concentrator at the photodetector. Mirror paths use the image-source
//! construction: the LED is reflected across the mirror plane and the
//! straight path from the image to the receiver must pass through the mirror
//! aperture. Gains are intensity gains, so contributions from several paths
//! simply add.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{segment_blocked, segment_hits_rect, CylinderBlocker, Pose, RectPatch, Vec3};
use crate::scenario::Room;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("transmitter and receiver coincide at ({x}, {y}, {z})")]
    ZeroDistance { x: f64, y: f64, z: f64 },
}

/// Lambertian order for a given half-power semi-angle.
pub fn lambertian_order(semi_angle_deg: f64) -> f64 {
    let m = -std::f64::consts::LN_2 / semi_angle_deg.to_radians().cos().ln();
    // cos(60°) is not exactly 0.5 in binary, which leaves m one ulp off 1.
    let rounded = m.round();
    if (m - rounded).abs() < 1e-9 {
        rounded
    } else {
        m
    }
}

pub(crate) fn cos_pow(c: f64, m: f64) -> f64 {
    if m == 1.0 {
        c
    } else {
        c.powf(m)
    }
}

/// Optical transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedSource {
    pub pose: Pose,
    pub transmit_power_w: f64,
    pub semi_angle_deg: f64,
    pub lambertian_order: f64,
}

impl LedSource {
    pub fn new(pose: Pose, transmit_power_w: f64, semi_angle_deg: f64) -> Self {
        LedSource {
            pose,
            transmit_power_w,
            semi_angle_deg,
            lambertian_order: lambertian_order(semi_angle_deg),
        }
    }

    pub fn position(&self) -> Vec3 {
        self.pose.position
    }
}

/// Photodetector front end: everything about the receiver except where it is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhotoDetector {
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    /// A/W
    pub responsivity: f64,
    pub filter_gain: f64,
    pub refractive_index: f64,
}

impl Default for PhotoDetector {
    fn default() -> Self {
        PhotoDetector {
            pd_area_m2: 1e-4,
            fov_deg: 70.0,
            responsivity: 0.53,
            filter_gain: 1.0,
            refractive_index: 1.5,
        }
    }
}

impl PhotoDetector {
    /// `n² / sin²(FoV)`
    pub fn concentrator_gain(&self) -> f64 {
        let s = self.fov_deg.to_radians().sin();
        self.refractive_index * self.refractive_index / (s * s)
    }

    /// Area times filter and concentrator gains.
    pub fn collection_area(&self) -> f64 {
        self.pd_area_m2 * self.filter_gain * self.concentrator_gain()
    }

    pub fn cos_fov(&self) -> f64 {
        self.fov_deg.to_radians().cos()
    }
}

/// A positioned user device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub pose: Pose,
    pub detector: PhotoDetector,
}

impl Receiver {
    pub fn new(pose: Pose, detector: PhotoDetector) -> Self {
        Receiver { pose, detector }
    }

    pub fn position(&self) -> Vec3 {
        self.pose.position
    }
}

/// Thermal noise at the photodetector output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// A²/Hz
    pub thermal_psd: f64,
    pub bandwidth_hz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            thermal_psd: 1e-21,
            bandwidth_hz: 2e8,
        }
    }
}

impl NoiseModel {
    /// σ² in A².
    pub fn noise_power(&self) -> f64 {
        self.thermal_psd * self.bandwidth_hz
    }
}

/// Mapping from electrical SNR to achievable rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    /// `(B/2)·log2(1 + e/(2π)·SNR)`, the intensity-channel lower bound.
    #[default]
    ImddLowerBound,
    /// `B·log2(1 + SNR)`
    Shannon,
}

impl RateFormula {
    pub fn rate(self, snr: f64, bandwidth_hz: f64) -> f64 {
        if snr <= 0.0 {
            return 0.0;
        }
        match self {
            RateFormula::ImddLowerBound => 0.5 * bandwidth_hz * (1.0 + E / (2.0 * PI) * snr).log2(),
            RateFormula::Shannon => bandwidth_hz * (1.0 + snr).log2(),
        }
    }
}

/// Electrical SNR `(R·P·H)² / σ²`.
pub fn electrical_snr(h: f64, src: &LedSource, rx: &Receiver, noise: &NoiseModel) -> f64 {
    let i = rx.detector.responsivity * src.transmit_power_w * h;
    i * i / noise.noise_power()
}

pub fn achievable_rate(h: f64, src: &LedSource, rx: &Receiver, noise: &NoiseModel, formula: RateFormula) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    formula.rate(electrical_snr(h, src, rx, noise), noise.bandwidth_hz)
}

/// The link-level parameters shared by every transmitter and receiver in a
/// run. Bundles what is needed to turn a gain into a rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub transmit_power_w: f64,
    pub semi_angle_deg: f64,
    pub detector: PhotoDetector,
    pub noise: NoiseModel,
    pub formula: RateFormula,
}

impl LinkBudget {
    pub fn led(&self, pose: Pose) -> LedSource {
        LedSource::new(pose, self.transmit_power_w, self.semi_angle_deg)
    }

    pub fn receiver(&self, pose: Pose) -> Receiver {
        Receiver::new(pose, self.detector)
    }

    pub fn with_power(&self, transmit_power_w: f64) -> LinkBudget {
        LinkBudget {
            transmit_power_w,
            ..*self
        }
    }

    pub fn snr(&self, h: f64) -> f64 {
        let i = self.detector.responsivity * self.transmit_power_w * h;
        i * i / self.noise.noise_power()
    }

    pub fn rate(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        self.formula.rate(self.snr(h), self.noise.bandwidth_hz)
    }
}

/// Lambertian gain given emission/incidence cosines and the total path length.
/// Angular cutoffs must already have been applied.
fn lambertian(src: &LedSource, detector: &PhotoDetector, cos_emit: f64, cos_incid: f64, dist: f64) -> f64 {
    let m = src.lambertian_order;
    (m + 1.0) * detector.collection_area() * cos_pow(cos_emit, m) * cos_incid / (2.0 * PI * dist * dist)
}

/// Direct line-of-sight gain.
///
/// Zero when the receiver is behind the LED, outside the receiver FoV, or the
/// path is occluded by any of `blockers`.
pub fn los_gain(src: &LedSource, rx: &Receiver, blockers: &[CylinderBlocker]) -> Result<f64, ChannelError> {
    let s = src.position();
    let r = rx.position();
    let v = r - s;
    let d = v.norm();
    if d == 0.0 {
        return Err(ChannelError::ZeroDistance { x: s.x, y: s.y, z: s.z });
    }
    let cos_emit = src.pose.boresight.dot(v) / d;
    if cos_emit <= 0.0 {
        return Ok(0.0);
    }
    let cos_incid = -rx.pose.boresight.dot(v) / d;
    if cos_incid <= 0.0 || cos_incid < rx.detector.cos_fov() {
        return Ok(0.0);
    }
    if segment_blocked(s, r, blockers) {
        return Ok(0.0);
    }
    Ok(lambertian(src, &rx.detector, cos_emit, cos_incid, d))
}

/// Which wall a mirror array hangs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wall {
    /// x = 0
    West,
    /// x = width
    East,
    /// y = 0
    South,
    /// y = depth
    North,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::West, Wall::East, Wall::South, Wall::North];

    /// Inward-facing unit normal.
    pub fn inward_normal(self) -> Vec3 {
        match self {
            Wall::West => Vec3::new(1.0, 0.0, 0.0),
            Wall::East => Vec3::new(-1.0, 0.0, 0.0),
            Wall::South => Vec3::new(0.0, 1.0, 0.0),
            Wall::North => Vec3::new(0.0, -1.0, 0.0),
        }
    }

    /// Horizontal in-wall axis, chosen so that `normal × tangent` points up.
    pub fn tangent(self) -> Vec3 {
        Vec3::UP.cross(self.inward_normal())
    }

    pub fn name(self) -> &'static str {
        match self {
            Wall::West => "west",
            Wall::East => "east",
            Wall::South => "south",
            Wall::North => "north",
        }
    }
}

/// One flat mirror that can tilt about its center.
///
/// `yaw` turns the normal toward the wall tangent, `roll` toward the vertical
/// in-wall axis; both are zero when the mirror lies flat on its mount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorElement {
    pub patch: RectPatch,
    pub yaw: f64,
    pub roll: f64,
    pub reflectivity: f64,
}

impl MirrorElement {
    pub fn new(patch: RectPatch, reflectivity: f64) -> Self {
        MirrorElement {
            patch,
            yaw: 0.0,
            roll: 0.0,
            reflectivity,
        }
    }

    pub fn with_orientation(&self, yaw: f64, roll: f64) -> MirrorElement {
        MirrorElement { yaw, roll, ..*self }
    }

    /// The mirror surface at its current orientation.
    pub fn oriented_patch(&self) -> RectPatch {
        oriented_patch(&self.patch, self.yaw, self.roll)
    }
}

/// Rotates a mounted patch by `(yaw, roll)` about its center.
pub fn oriented_patch(base: &RectPatch, yaw: f64, roll: f64) -> RectPatch {
    let n0 = base.normal;
    let t0 = base.tangent;
    let b0 = base.bitangent();
    let (sy, cy) = yaw.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let normal = (n0 * cy + t0 * sy) * cr + b0 * sr;
    let tangent = t0 * cy - n0 * sy;
    RectPatch {
        center: base.center,
        normal,
        tangent,
        half_width: base.half_width,
        half_height: base.half_height,
    }
}

/// Inverse of [`oriented_patch`]'s normal map: the `(yaw, roll)` that turns
/// the mounted normal into `normal`.
pub fn orientation_for_normal(base: &RectPatch, normal: Vec3) -> (f64, f64) {
    let roll = normal.dot(base.bitangent()).clamp(-1.0, 1.0).asin();
    let yaw = normal.dot(base.tangent).atan2(normal.dot(base.normal));
    (yaw, roll)
}

/// Gain of the single-bounce path LED → mirror → receiver.
///
/// Returns zero unless the straight line from the LED's mirror image to the
/// receiver crosses the mirror aperture, both legs are unoccluded, the hit
/// point lies in front of the LED, and the arrival direction is inside the
/// receiver FoV.
pub fn ris_path_gain(src: &LedSource, mirror: &MirrorElement, rx: &Receiver, blockers: &[CylinderBlocker]) -> f64 {
    if mirror.reflectivity <= 0.0 {
        return 0.0;
    }
    let patch = mirror.oriented_patch();
    ris_path_gain_for_patch(src, &patch, mirror.reflectivity, rx, blockers)
}

pub(crate) fn ris_path_gain_for_patch(
    src: &LedSource,
    patch: &RectPatch,
    reflectivity: f64,
    rx: &Receiver,
    blockers: &[CylinderBlocker],
) -> f64 {
    let s = src.position();
    let r = rx.position();
    let n = patch.normal;
    // only the front face reflects
    if (s - patch.center).dot(n) <= 0.0 || (r - patch.center).dot(n) <= 0.0 {
        return 0.0;
    }
    let image = s.reflect_across_plane(patch.center, n);
    let Some(q) = segment_hits_rect(image, r, patch) else {
        return 0.0;
    };
    let leg1 = q - s;
    let d1 = leg1.norm();
    let leg2 = r - q;
    let d2 = leg2.norm();
    if d1 == 0.0 || d2 == 0.0 {
        return 0.0;
    }
    let cos_emit = src.pose.boresight.dot(leg1) / d1;
    if cos_emit <= 0.0 {
        return 0.0;
    }
    let cos_incid = -rx.pose.boresight.dot(leg2) / d2;
    if cos_incid <= 0.0 || cos_incid < rx.detector.cos_fov() {
        return 0.0;
    }
    if segment_blocked(s, q, blockers) || segment_blocked(q, r, blockers) {
        return 0.0;
    }
    reflectivity * lambertian(src, &rx.detector, cos_emit, cos_incid, d1 + d2)
}

/// Sum of the direct path (optional) and every mirror path.
pub fn total_gain(
    src: &LedSource,
    mirrors: &[MirrorElement],
    rx: &Receiver,
    blockers: &[CylinderBlocker],
    include_los: bool,
) -> Result<f64, ChannelError> {
    let los = if include_los { los_gain(src, rx, blockers)? } else { 0.0 };
    Ok(los + mirrors.iter().map(|m| ris_path_gain(src, m, rx, blockers)).sum::<f64>())
}

/// Placement of the mirror arrays on the walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisLayout {
    pub rows: usize,
    pub cols: usize,
    /// Edge length of each square mirror, meters.
    pub mirror_size_m: f64,
    pub reflectivity: f64,
    /// Height of the array center above the floor.
    pub center_height_m: f64,
    /// Bound on |yaw| and |roll|.
    pub max_tilt_deg: f64,
    pub walls: Vec<Wall>,
}

impl Default for RisLayout {
    fn default() -> Self {
        RisLayout {
            rows: 10,
            cols: 40,
            mirror_size_m: 0.1,
            reflectivity: 0.95,
            center_height_m: 1.5,
            max_tilt_deg: 60.0,
            walls: Wall::ALL.to_vec(),
        }
    }
}

/// All mirrors on one wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisArray {
    pub wall: Wall,
    pub mirrors: Vec<MirrorElement>,
}

impl RisArray {
    /// A `rows × cols` grid of flat mirrors centered horizontally on the wall.
    pub fn on_wall(wall: Wall, room: &Room, layout: &RisLayout) -> RisArray {
        let n0 = wall.inward_normal();
        let t0 = wall.tangent();
        let (wall_center, _) = match wall {
            Wall::West => (Vec3::new(0.0, room.depth / 2.0, 0.0), room.depth),
            Wall::East => (Vec3::new(room.width, room.depth / 2.0, 0.0), room.depth),
            Wall::South => (Vec3::new(room.width / 2.0, 0.0, 0.0), room.width),
            Wall::North => (Vec3::new(room.width / 2.0, room.depth, 0.0), room.width),
        };
        let s = layout.mirror_size_m;
        let mut mirrors = Vec::with_capacity(layout.rows * layout.cols);
        for row in 0..layout.rows {
            let z = layout.center_height_m + (row as f64 - (layout.rows as f64 - 1.0) / 2.0) * s;
            for col in 0..layout.cols {
                let u = (col as f64 - (layout.cols as f64 - 1.0) / 2.0) * s;
                let center = Vec3::new(wall_center.x, wall_center.y, z) + t0 * u;
                let patch = RectPatch {
                    center,
                    normal: n0,
                    tangent: t0,
                    half_width: s / 2.0,
                    half_height: s / 2.0,
                };
                mirrors.push(MirrorElement::new(patch, layout.reflectivity));
            }
        }
        RisArray { wall, mirrors }
    }
}

/// One array per configured wall.
pub fn build_wall_arrays(room: &Room, layout: &RisLayout) -> Vec<RisArray> {
    layout
        .walls
        .iter()
        .map(|&w| RisArray::on_wall(w, room, layout))
        .collect()
}
