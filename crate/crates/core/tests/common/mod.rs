//! Independent reference implementations shared by the integration tests and
//! the acceptance suite. Nothing here calls the code under test except for
//! plain data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use mapvlc::channel::{oriented_patch, LedSource, MirrorElement, Receiver};
use mapvlc::geometry::{CylinderBlocker, RectPatch, Vec3};
use rand::Rng;

/// Sampling step of the dense oracles, meters.
pub const SAMPLE_STEP_M: f64 = 1e-4;

fn inside_cylinder(p: Vec3, c: &CylinderBlocker, grow: f64) -> bool {
    let dx = p.x - c.base_center.x;
    let dy = p.y - c.base_center.y;
    let r = 0.5 * c.diameter + grow;
    let z = p.z - c.base_center.z;
    r > 0.0 && z >= -grow && z <= c.height + grow && dx * dx + dy * dy <= r * r
}

/// Whether any sample of the segment, taken every [`SAMPLE_STEP_M`], lies in
/// the cylinder grown (or shrunk, for negative `grow`) by `grow` meters.
pub fn sampled_cylinder_hit(p0: Vec3, p1: Vec3, c: &CylinderBlocker, grow: f64) -> bool {
    let len = p0.distance(p1);
    let n = (len / SAMPLE_STEP_M).ceil().max(1.0) as usize;
    (0..=n).any(|i| {
        let t = i as f64 / n as f64;
        inside_cylinder(p0 + (p1 - p0) * t, c, grow)
    })
}

/// Verdict of the dense oracle on one segment/cylinder case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Hit,
    Miss,
    /// Closer to the surface than the sampling resolution.
    Unresolved,
}

pub fn cylinder_oracle(p0: Vec3, p1: Vec3, c: &CylinderBlocker) -> Oracle {
    if sampled_cylinder_hit(p0, p1, c, -SAMPLE_STEP_M) {
        Oracle::Hit
    } else if !sampled_cylinder_hit(p0, p1, c, SAMPLE_STEP_M) {
        Oracle::Miss
    } else {
        Oracle::Unresolved
    }
}

/// Distance from `p` to the closed rectangle.
pub fn distance_to_rect(p: Vec3, r: &RectPatch) -> f64 {
    let b = r.normal.cross(r.tangent);
    let rel = p - r.center;
    let u = rel.dot(r.tangent).clamp(-r.half_width, r.half_width);
    let v = rel.dot(b).clamp(-r.half_height, r.half_height);
    let closest = r.center + r.tangent * u + b * v;
    p.distance(closest)
}

pub fn rect_oracle(p0: Vec3, p1: Vec3, r: &RectPatch) -> Oracle {
    let len = p0.distance(p1);
    let n = (len / SAMPLE_STEP_M).ceil().max(1.0) as usize;
    let b = r.normal.cross(r.tangent);
    let sample = |i: usize| p0 + (p1 - p0) * (i as f64 / n as f64);
    let side = |p: Vec3| (p - r.center).dot(r.normal);
    let well_inside = |p: Vec3| {
        let rel = p - r.center;
        rel.dot(r.tangent).abs() <= r.half_width - SAMPLE_STEP_M && rel.dot(b).abs() <= r.half_height - SAMPLE_STEP_M
    };
    let mut near = false;
    for i in 0..=n {
        let p = sample(i);
        near |= distance_to_rect(p, r) <= SAMPLE_STEP_M;
        if i < n {
            let q = sample(i + 1);
            if side(p) * side(q) <= 0.0 && well_inside(p) && well_inside(q) {
                return Oracle::Hit;
            }
        }
    }
    if near {
        Oracle::Unresolved
    } else {
        Oracle::Miss
    }
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

pub fn random_rect<R: Rng>(rng: &mut R) -> RectPatch {
    let normal = random_unit(rng);
    let helper = if normal.z.abs() < 0.9 {
        Vec3::UP
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let tangent = helper.cross(normal).normalized();
    RectPatch {
        center: Vec3::new(
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        ),
        normal,
        tangent,
        half_width: rng.gen_range(0.02..0.6),
        half_height: rng.gen_range(0.02..0.6),
    }
}

/// Mirror path gain computed by reflecting the receiver instead of the LED.
pub fn receiver_image_gain(src: &LedSource, mirror: &MirrorElement, rx: &Receiver) -> f64 {
    let patch = oriented_patch(&mirror.patch, mirror.yaw, mirror.roll);
    let n = patch.normal;
    let s = src.pose.position;
    let r = rx.pose.position;
    let hs = (s - patch.center).dot(n);
    let hr = (r - patch.center).dot(n);
    if hs <= 0.0 || hr <= 0.0 {
        return 0.0;
    }
    let r_image = r - n * (2.0 * hr);
    // the segment s → r' crosses the plane at the same point as s' → r
    let t = hs / (hs + hr);
    let q = s + (r_image - s) * t;
    let rel = q - patch.center;
    let b = n.cross(patch.tangent);
    if rel.dot(patch.tangent).abs() > patch.half_width || rel.dot(b).abs() > patch.half_height {
        return 0.0;
    }
    let d1 = s.distance(q);
    let d2 = q.distance(r);
    let cos_phi = src.pose.boresight.dot(q - s) / d1;
    let cos_psi = rx.pose.boresight.dot(q - r) / d2;
    let det = &rx.detector;
    let fov = det.fov_deg.to_radians();
    if cos_phi <= 0.0 || cos_psi <= 0.0 || cos_psi < fov.cos() {
        return 0.0;
    }
    let g = det.refractive_index.powi(2) / fov.sin().powi(2);
    let m = src.lambertian_order;
    let d = d1 + d2;
    mirror.reflectivity * (m + 1.0) * det.pd_area_m2 * det.filter_gain * g * cos_phi.powf(m) * cos_psi
        / (2.0 * PI * d * d)
}

/// Index and value of the largest entry; the first one wins ties.
pub fn max_scan(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

/// Best gain over an `n × n` grid of `(yaw, roll)` covering `[-max, max]²`.
pub fn angle_grid_max(n: usize, max_tilt: f64, mut gain: impl FnMut(f64, f64) -> f64) -> (f64, f64, f64) {
    let step = 2.0 * max_tilt / (n - 1) as f64;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let (yaw, roll) = (-max_tilt + i as f64 * step, -max_tilt + j as f64 * step);
            let g = gain(yaw, roll);
            if g > best.2 {
                best = (yaw, roll, g);
            }
        }
    }
    best
}

/// Randomized segment/cylinder cases; half of them aimed at the surface.
pub fn cylinder_cases<R: Rng>(rng: &mut R, n: usize) -> Vec<(Vec3, Vec3, CylinderBlocker)> {
    (0..n)
        .map(|i| {
            let c = CylinderBlocker::new(0.0, 0.0, rng.gen_range(0.1..1.0), rng.gen_range(0.5..2.0));
            let (p0, p1) = if i % 2 == 0 {
                let mut p = || {
                    Vec3::new(
                        rng.gen_range(-1.5..1.5),
                        rng.gen_range(-1.5..1.5),
                        rng.gen_range(-0.3..2.5),
                    )
                };
                (p(), p())
            } else {
                let phi = rng.gen_range(0.0..2.0 * PI);
                let r = c.radius() + rng.gen_range(-0.01..0.01);
                let z = rng.gen_range(-0.05..c.height + 0.05);
                let target = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                let dir = random_unit(rng);
                (
                    target + dir * rng.gen_range(0.0..1.5),
                    target - dir * rng.gen_range(0.0..1.5),
                )
            };
            (p0, p1, c)
        })
        .collect()
}

/// Randomized segment/rectangle cases; half of them aimed near the edges.
pub fn rect_cases<R: Rng>(rng: &mut R, n: usize) -> Vec<(Vec3, Vec3, RectPatch)> {
    (0..n)
        .map(|i| {
            let r = random_rect(rng);
            let (p0, p1) = if i % 2 == 0 {
                let mut p = || {
                    Vec3::new(
                        rng.gen_range(-1.5..1.5),
                        rng.gen_range(-1.5..1.5),
                        rng.gen_range(-1.5..1.5),
                    )
                };
                (p(), p())
            } else {
                let b = r.normal.cross(r.tangent);
                let u = r.half_width * rng.gen_range(-1.05..1.05);
                let v = r.half_height * rng.gen_range(-1.05..1.05);
                let target = r.center + r.tangent * u + b * v;
                let dir = random_unit(rng);
                (
                    target + dir * rng.gen_range(0.0..1.5),
                    target - dir * rng.gen_range(-0.1..1.5),
                )
            };
            (p0, p1, r)
        })
        .collect()
}

/// Counts of (agreements, unresolved, disagreements) of `verdict` against
/// `oracle` over `cases`.
pub fn tally<T>(cases: &[T], verdict: impl Fn(&T) -> bool, oracle: impl Fn(&T) -> Oracle) -> (usize, usize, usize) {
    let mut counts = (0, 0, 0);
    for case in cases {
        match (verdict(case), oracle(case)) {
            (true, Oracle::Hit) | (false, Oracle::Miss) => counts.0 += 1,
            (_, Oracle::Unresolved) => counts.1 += 1,
            _ => counts.2 += 1,
        }
    }
    counts
}

/// One LED, one mounted mirror and one receiver that some orientation of the
/// mirror can connect.
#[derive(Debug, Clone, Copy)]
pub struct MirrorCase {
    pub src: LedSource,
    pub base: RectPatch,
    pub rx: Receiver,
}

/// Seeded single-mirror cases on the default west-wall array, kept only when
/// the `n × n` angle grid finds a nonzero path. Returns each case with its
/// grid optimum.
pub fn feasible_mirror_cases(seed: u64, count: usize, n: usize, max_tilt: f64) -> Vec<(MirrorCase, f64)> {
    use mapvlc::channel::{build_wall_arrays, ris_path_gain, PhotoDetector, RisLayout, Wall};
    use mapvlc::geometry::Pose;
    use mapvlc::scenario::Room;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let layout = RisLayout {
        walls: vec![Wall::West],
        ..RisLayout::default()
    };
    let mirrors = build_wall_arrays(&Room::default(), &layout).remove(0).mirrors;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mirror = mirrors[rng.gen_range(0..mirrors.len())];
        let src = LedSource::new(
            Pose::downward(Vec3::new(rng.gen_range(2.0..9.0), rng.gen_range(1.0..9.0), 3.0)),
            1.0,
            60.0,
        );
        let p = Vec3::new(rng.gen_range(0.8..4.0), rng.gen_range(2.0..8.0), 0.75);
        let polar = rng.gen_range(0.0..45f64).to_radians();
        let az = rng.gen_range(0.0..2.0 * PI);
        let normal = Vec3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos());
        let rx = Receiver::new(Pose::new(p, normal), PhotoDetector::default());
        let (_, _, best) = angle_grid_max(n, max_tilt, |yaw, roll| {
            ris_path_gain(&src, &mirror.with_orientation(yaw, roll), &rx, &[])
        });
        if best > 0.0 {
            out.push((
                MirrorCase {
                    src,
                    base: mirror.patch,
                    rx,
                },
                best,
            ));
        }
    }
    out
}

/// 10 cm mirror on the `x = 0` wall at `(0, y, z)`, turned so that the
/// specular path from `s` to `r` passes through its center, then perturbed by
/// `jitter` radians of yaw and roll.
pub fn aimed_west_mirror(s: Vec3, r: Vec3, y: f64, z: f64, jitter: (f64, f64)) -> MirrorElement {
    let c = Vec3::new(0.0, y, z);
    let base = MirrorElement::new(
        RectPatch {
            center: c,
            normal: Vec3::new(1.0, 0.0, 0.0),
            tangent: Vec3::new(0.0, 1.0, 0.0),
            half_width: 0.05,
            half_height: 0.05,
        },
        0.95,
    );
    let bis = ((s - c).normalized() + (r - c).normalized()).normalized();
    let (yaw, roll) = mapvlc::channel::orientation_for_normal(&base.patch, bis);
    base.with_orientation(yaw + jitter.0, roll + jitter.1)
}
