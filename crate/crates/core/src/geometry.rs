//! Vector math and intersection tests used by the channel and scenario code.
//!
//! Everything here is a pure function of its arguments. Blockers are solid
//! cylinders standing on the floor with a vertical axis; mirrors are flat
//! rectangles.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point or direction in room coordinates (meters, z up).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    pub const DOWN: Vec3 = Vec3::new(0.0, 0.0, -1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. The zero vector is returned as is.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Horizontal (x, y) distance, ignoring height.
    pub fn horizontal_distance(self, other: Vec3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Mirror image of this point across the plane through `origin` with unit `normal`.
    pub fn reflect_across_plane(self, origin: Vec3, normal: Vec3) -> Vec3 {
        self - normal * (2.0 * (self - origin).dot(normal))
    }

    /// Specular reflection of a direction about a unit `normal`.
    pub fn reflect_direction(self, normal: Vec3) -> Vec3 {
        self - normal * (2.0 * self.dot(normal))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Position plus unit boresight, shared by LEDs, receivers and mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub boresight: Vec3,
}

impl Pose {
    /// Builds a pose, normalizing the boresight.
    pub fn new(position: Vec3, boresight: Vec3) -> Self {
        Pose {
            position,
            boresight: boresight.normalized(),
        }
    }

    /// Ceiling-mounted transmitter facing straight down.
    pub fn downward(position: Vec3) -> Self {
        Pose {
            position,
            boresight: Vec3::DOWN,
        }
    }
}

/// Solid vertical cylinder standing on the floor (a person).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderBlocker {
    /// Center of the base disc; z is expected to be 0.
    pub base_center: Vec3,
    pub diameter: f64,
    pub height: f64,
}

impl CylinderBlocker {
    pub fn new(x: f64, y: f64, diameter: f64, height: f64) -> Self {
        CylinderBlocker {
            base_center: Vec3::new(x, y, 0.0),
            diameter,
            height,
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Closed-solid membership test.
    pub fn contains(&self, p: Vec3) -> bool {
        let dx = p.x - self.base_center.x;
        let dy = p.y - self.base_center.y;
        let r = self.radius();
        let z = p.z - self.base_center.z;
        z >= 0.0 && z <= self.height && dx * dx + dy * dy <= r * r
    }
}

/// Flat rectangle with an orthonormal (tangent, bitangent, normal) frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPatch {
    pub center: Vec3,
    pub normal: Vec3,
    /// In-plane axis for `half_width`.
    pub tangent: Vec3,
    pub half_width: f64,
    pub half_height: f64,
}

impl RectPatch {
    /// In-plane axis for `half_height`: `normal × tangent`.
    pub fn bitangent(&self) -> Vec3 {
        self.normal.cross(self.tangent)
    }

    /// Distance from the center to a corner. Any rotation about the center
    /// keeps the patch inside a ball of this radius.
    pub fn half_diagonal(&self) -> f64 {
        self.half_width.hypot(self.half_height)
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let t = self.tangent * self.half_width;
        let b = self.bitangent() * self.half_height;
        [
            self.center - t - b,
            self.center + t - b,
            self.center + t + b,
            self.center - t + b,
        ]
    }
}

/// Angle in radians between two unit vectors, in `[0, π]`.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// Contacts closer than this to a segment endpoint are not blockage.
const ENDPOINT_CONTACT_TOLERANCE_M: f64 = 1e-9;

/// Whether the open segment `(p0, p1)` passes through the closed solid cylinder.
///
/// The segment is clipped against the height slab and against the infinite
/// vertical cylinder; the link is blocked when the surviving parameter range
/// overlaps the segment interior. Touching the surface at an endpoint does
/// not count.
pub fn segment_hits_cylinder(p0: Vec3, p1: Vec3, c: &CylinderBlocker) -> bool {
    let d = p1 - p0;
    let len = d.norm();
    if len == 0.0 {
        return false;
    }
    let eps_t = ENDPOINT_CONTACT_TOLERANCE_M / len;

    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);

    // height slab
    let z0 = p0.z - c.base_center.z;
    if d.z.abs() < 1e-15 {
        if z0 < 0.0 || z0 > c.height {
            return false;
        }
    } else {
        let ta = -z0 / d.z;
        let tb = (c.height - z0) / d.z;
        lo = lo.max(ta.min(tb));
        hi = hi.min(ta.max(tb));
    }

    // infinite cylinder around the axis
    let fx = p0.x - c.base_center.x;
    let fy = p0.y - c.base_center.y;
    let r = c.radius();
    let a = d.x * d.x + d.y * d.y;
    let cc = fx * fx + fy * fy - r * r;
    if a < 1e-30 {
        if cc > 0.0 {
            return false;
        }
    } else {
        let b = 2.0 * (fx * d.x + fy * d.y);
        let disc = b * b - 4.0 * a * cc;
        if disc < 0.0 {
            return false;
        }
        let s = disc.sqrt();
        let t1 = (-b - s) / (2.0 * a);
        let t2 = (-b + s) / (2.0 * a);
        lo = lo.max(t1);
        hi = hi.min(t2);
    }

    lo <= hi && hi > eps_t && lo < 1.0 - eps_t
}

/// True if any of `blockers` occludes the segment.
pub fn segment_blocked(p0: Vec3, p1: Vec3, blockers: &[CylinderBlocker]) -> bool {
    blockers.iter().any(|c| segment_hits_cylinder(p0, p1, c))
}

/// Crossing point of the closed segment `[p0, p1]` with the rectangle, if any.
///
/// A segment parallel to the rectangle's plane never reports a hit.
pub fn segment_hits_rect(p0: Vec3, p1: Vec3, r: &RectPatch) -> Option<Vec3> {
    let d = p1 - p0;
    let denom = r.normal.dot(d);
    if denom.abs() <= 1e-15 * d.norm() {
        return None;
    }
    let t = r.normal.dot(r.center - p0) / denom;
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    let q = p0 + d * t;
    let rel = q - r.center;
    let u = rel.dot(r.tangent);
    let v = rel.dot(r.bitangent());
    (u.abs() <= r.half_width && v.abs() <= r.half_height).then_some(q)
}

/// Distribution of the receiver normal: polar angle from vertical uniform on
/// `[polar_min_deg, polar_max_deg]`, azimuth uniform on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrientationModel {
    pub polar_min_deg: f64,
    pub polar_max_deg: f64,
}

impl Default for OrientationModel {
    fn default() -> Self {
        OrientationModel {
            polar_min_deg: 0.0,
            polar_max_deg: 45.0,
        }
    }
}

impl OrientationModel {
    /// Always facing straight up.
    pub fn upright() -> Self {
        OrientationModel {
            polar_min_deg: 0.0,
            polar_max_deg: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=90.0).contains(&self.polar_min_deg)
            && (0.0..=90.0).contains(&self.polar_max_deg)
            && self.polar_min_deg <= self.polar_max_deg
    }
}

/// Draws a device normal. Always consumes two uniforms so that streams stay
/// aligned across models with different polar supports.
pub fn sample_device_orientation<R: Rng + ?Sized>(rng: &mut R, model: &OrientationModel) -> Vec3 {
    let u: f64 = rng.gen();
    let azimuth = 2.0 * PI * rng.gen::<f64>();
    let polar = (model.polar_min_deg + u * (model.polar_max_deg - model.polar_min_deg)).to_radians();
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(sp * ca, sp * sa, cp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn angles_of_basis_vectors() {
        assert_eq!(angle_between(Vec3::UP, Vec3::UP), 0.0);
        assert!(close(angle_between(Vec3::UP, Vec3::DOWN), PI, 1e-15));
        assert!(close(
            angle_between(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            PI / 2.0,
            1e-15
        ));
    }

    #[test]
    fn angle_clamps_rounding() {
        let a = Vec3::new(1.0, 1e-9, 0.0).normalized();
        assert!(angle_between(a, a).is_finite());
    }

    #[test]
    fn vertical_segment_through_axis_is_blocked() {
        let c = CylinderBlocker::new(2.0, 3.0, 0.3, 1.65);
        assert!(segment_hits_cylinder(
            Vec3::new(2.0, 3.0, 3.0),
            Vec3::new(2.0, 3.0, 0.75),
            &c
        ));
    }

    #[test]
    fn segment_above_cylinder_is_clear() {
        let c = CylinderBlocker::new(2.0, 3.0, 0.3, 1.65);
        assert!(!segment_hits_cylinder(
            Vec3::new(0.0, 3.0, 1.7),
            Vec3::new(5.0, 3.0, 2.5),
            &c
        ));
    }

    #[test]
    fn endpoint_on_surface_does_not_block() {
        let c = CylinderBlocker::new(0.0, 0.0, 0.3, 1.65);
        // ends exactly on the side surface, coming from outside
        assert!(!segment_hits_cylinder(
            Vec3::new(0.15, 0.0, 1.0),
            Vec3::new(3.0, 0.0, 2.0),
            &c
        ));
        // ends on the top cap from above
        assert!(!segment_hits_cylinder(
            Vec3::new(0.0, 0.0, 1.65),
            Vec3::new(0.0, 0.0, 3.0),
            &c
        ));
    }

    #[test]
    fn horizontal_segment_inside_slab() {
        let c = CylinderBlocker::new(5.0, 5.0, 0.3, 1.65);
        assert!(segment_hits_cylinder(
            Vec3::new(0.0, 5.0, 1.0),
            Vec3::new(10.0, 5.0, 1.0),
            &c
        ));
        assert!(!segment_hits_cylinder(
            Vec3::new(0.0, 5.2, 1.0),
            Vec3::new(10.0, 5.2, 1.0),
            &c
        ));
    }

    #[test]
    fn segment_ending_inside_cylinder_blocks() {
        let c = CylinderBlocker::new(0.0, 0.0, 0.3, 1.65);
        assert!(segment_hits_cylinder(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(3.0, 0.0, 2.0),
            &c
        ));
    }

    #[test]
    fn perpendicular_segment_hits_patch_center() {
        let patch = RectPatch {
            center: Vec3::new(0.0, 5.0, 1.5),
            normal: Vec3::new(1.0, 0.0, 0.0),
            tangent: Vec3::new(0.0, 1.0, 0.0),
            half_width: 0.05,
            half_height: 0.05,
        };
        let hit =
            segment_hits_rect(Vec3::new(1.0, 5.0, 1.5), Vec3::new(-1.0, 5.0, 1.5), &patch).expect("crosses the patch");
        assert!(hit.distance(patch.center) < 1e-12);
        let miss = segment_hits_rect(Vec3::new(1.0, 6.05, 1.5), Vec3::new(-1.0, 6.05, 1.5), &patch);
        assert!(miss.is_none());
        let parallel = segment_hits_rect(Vec3::new(0.0, 4.0, 1.5), Vec3::new(0.0, 6.0, 1.5), &patch);
        assert!(parallel.is_none());
    }

    #[test]
    fn bitangent_is_right_handed() {
        let patch = RectPatch {
            center: Vec3::ZERO,
            normal: Vec3::new(1.0, 0.0, 0.0),
            tangent: Vec3::new(0.0, 1.0, 0.0),
            half_width: 1.0,
            half_height: 1.0,
        };
        assert_eq!(patch.bitangent(), Vec3::UP);
    }

    #[test]
    fn degenerate_orientation_points_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = sample_device_orientation(&mut rng, &OrientationModel::upright());
            assert_eq!(n.z, 1.0);
            assert_eq!(n.x.abs() + n.y.abs(), 0.0);
        }
    }

    #[test]
    fn orientation_sequence_is_reproducible() {
        let model = OrientationModel::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_device_orientation(&mut rng, &model))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn orientation_model_validity() {
        assert!(OrientationModel::default().is_valid());
        assert!(!OrientationModel {
            polar_min_deg: 0.0,
            polar_max_deg: 95.0
        }
        .is_valid());
        assert!(!OrientationModel {
            polar_min_deg: 30.0,
            polar_max_deg: 10.0
        }
        .is_valid());
    }
}
