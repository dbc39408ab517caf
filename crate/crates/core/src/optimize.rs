//! MAP placement over the ceiling track and sine-cosine search for mirror
//! orientations.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    cos_pow, los_gain, orientation_for_normal, oriented_patch, ris_path_gain_for_patch, ChannelError, LedSource,
    LinkBudget, Receiver, RisArray, Wall,
};
use crate::config::OptimizerConfig;
use crate::geometry::{angle_between, segment_blocked, segment_hits_cylinder, CylinderBlocker, Pose, RectPatch, Vec3};
use crate::scenario::{ScenarioRealization, TrackGrid};
use crate::seeding::{search_rng, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("track has no candidate points")]
    EmptyTrack,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub chosen_index: usize,
    pub chosen_point: Vec3,
    /// Rate at the chosen point, bits/s.
    pub objective: f64,
    pub evaluations: usize,
    pub elapsed: Duration,
}

/// Evaluates every candidate and keeps the best; ties go to the lowest index.
pub fn place_map_exhaustive<F>(track: &TrackGrid, mut objective: F) -> Result<PlacementResult, OptimizeError>
where
    F: FnMut(Vec3) -> Result<f64, ChannelError>,
{
    if track.is_empty() {
        return Err(OptimizeError::EmptyTrack);
    }
    let start = Instant::now();
    let mut best_index = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &p) in track.candidate_points.iter().enumerate() {
        let v = objective(p)?;
        if v > best_value {
            best_value = v;
            best_index = i;
        }
    }
    Ok(PlacementResult {
        chosen_index: best_index,
        chosen_point: track.candidate_points[best_index],
        objective: best_value,
        evaluations: track.len(),
        elapsed: start.elapsed(),
    })
}

/// Rate from a downward-facing LED at `point` to the device in `slot`.
pub fn map_rate(
    point: Vec3,
    rx: &Receiver,
    occluders: &[CylinderBlocker],
    link: &LinkBudget,
) -> Result<f64, ChannelError> {
    let led = link.led(Pose::downward(point));
    Ok(link.rate(los_gain(&led, rx, occluders)?))
}

/// Independent exhaustive placement in every slot, with no cost for moving.
pub fn place_map_per_slot(
    track: &TrackGrid,
    realization: &ScenarioRealization,
    link: &LinkBudget,
) -> Result<Vec<PlacementResult>, OptimizeError> {
    (0..realization.slots())
        .map(|slot| {
            let rx = link.receiver(realization.user_states[slot].device_pose());
            let occ = realization.occluders(slot);
            place_map_exhaustive(track, |p| map_rate(p, &rx, &occ, link))
        })
        .collect()
}

/// Sine-cosine algorithm settings with a box constraint per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaParams {
    pub population: usize,
    pub iterations: usize,
    pub amplitude: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ScaParams {
    pub fn new(cfg: &OptimizerConfig, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "bounds dimension mismatch");
        ScaParams {
            population: cfg.population,
            iterations: cfg.iterations,
            amplitude: cfg.amplitude,
            lower,
            upper,
        }
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best-so-far after initialization and after every iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Maximizes `objective` from a uniformly random initial population.
pub fn sca_optimize<R, F>(params: &ScaParams, objective: F, rng: &mut R) -> ScaOutcome
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let init = (0..params.population)
        .map(|_| {
            params
                .lower
                .iter()
                .zip(&params.upper)
                .map(|(&lo, &hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect()
        })
        .collect();
    sca_optimize_from(params, init, objective, rng)
}

/// Maximizes `objective` starting from the given population.
///
/// Each iteration moves every coordinate by
/// `r1·sin(r2)·|r3·P − x|` or `r1·cos(r2)·|r3·P − x|` (picked by `r4`), where
/// `P` is the best point found so far and `r1` decays linearly from the
/// amplitude to zero. Positions are clamped to the bounds.
pub fn sca_optimize_from<R, F>(
    params: &ScaParams,
    population: Vec<Vec<f64>>,
    mut objective: F,
    rng: &mut R,
) -> ScaOutcome
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let dims = params.dims();
    let score = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut flat: Vec<f64> = population.into_iter().flatten().collect();
    let (lower, upper) = (&params.lower[..], &params.upper[..]);

    let mut best = flat[..dims].to_vec();
    let mut best_value = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let mut consider = |flat: &[f64], best: &mut Vec<f64>, best_value: &mut f64, evaluations: &mut usize| {
        for x in flat.chunks_exact(dims) {
            let v = score(objective(x));
            *evaluations += 1;
            if v > *best_value {
                *best_value = v;
                best.copy_from_slice(x);
            }
        }
    };
    consider(&flat, &mut best, &mut best_value, &mut evaluations);
    let mut history = Vec::with_capacity(params.iterations + 1);
    history.push(best_value);

    let t_max = params.iterations as f64;
    for t in 0..params.iterations {
        let r1 = params.amplitude - t as f64 * params.amplitude / t_max;
        for x in flat.chunks_exact_mut(dims) {
            for (j, xj) in x.iter_mut().enumerate() {
                let r2 = 2.0 * PI * rng.gen::<f64>();
                let r3 = 2.0 * rng.gen::<f64>();
                let r4 = rng.gen::<f64>();
                let reach = (r3 * best[j] - *xj).abs();
                let step = if r4 < 0.5 {
                    r1 * r2.sin() * reach
                } else {
                    r1 * r2.cos() * reach
                };
                *xj = (*xj + step).clamp(lower[j], upper[j]);
            }
        }
        consider(&flat, &mut best, &mut best_value, &mut evaluations);
        history.push(best_value);
    }

    ScaOutcome {
        best,
        value: best_value,
        history,
        evaluations,
    }
}

/// Angle between the ray reflected at the mirror center and the direction to
/// the receiver. Zero when the mirror is aligned; back-face configurations get
/// an extra π.
pub fn alignment_error(src: Vec3, patch: &RectPatch, rx: Vec3) -> f64 {
    let c = patch.center;
    let n = patch.normal;
    let reflected = (c - src).normalized().reflect_direction(n);
    let err = angle_between(reflected, (rx - c).normalized());
    if (src - c).dot(n) <= 0.0 || (rx - c).dot(n) <= 0.0 {
        err + PI
    } else {
        err
    }
}

/// Conservative test: `false` only if no orientation within `±max_tilt`
/// can produce a nonzero path through this mounted mirror.
pub fn mirror_may_contribute(src: &LedSource, base: &RectPatch, rx: &Receiver, max_tilt: f64) -> bool {
    let reach = base.half_diagonal();
    let c = base.center;
    let s = src.position();
    let r = rx.position();
    let to_mirror = c - r;
    let d_rx = to_mirror.norm();
    let d_src = (c - s).norm();
    if d_rx <= reach || d_src <= reach {
        return true;
    }
    let slack_rx = (reach / d_rx).asin();
    let slack_src = (reach / d_src).asin();

    if angle_between(rx.pose.boresight, to_mirror * (1.0 / d_rx)) - slack_rx > rx.detector.fov_deg.to_radians() {
        return false;
    }
    if angle_between(src.pose.boresight, (c - s) * (1.0 / d_src)) - slack_src >= FRAC_PI_2 {
        return false;
    }

    let u = (s - c) * (1.0 / d_src);
    let w = (r - c) * (1.0 / d_rx);
    if u.dot(w) < -0.9 {
        return true;
    }
    let bisector = (u + w).normalized();
    let (yaw, roll) = orientation_for_normal(base, bisector);
    let margin = slack_rx + slack_src + 1e-6;
    if roll.abs() - margin > max_tilt {
        return false;
    }
    let steepest = roll.abs() + margin;
    if steepest < FRAC_PI_2 && yaw.abs() - margin / steepest.cos() > max_tilt {
        return false;
    }
    true
}

/// Blockers that could touch any LED → mirror → receiver path through a
/// mirror rotating about `center` inside a ball of radius `reach`.
fn relevant_blockers(s: Vec3, center: Vec3, r: Vec3, reach: f64, blockers: &[CylinderBlocker]) -> Vec<CylinderBlocker> {
    let grow = reach + 1e-6;
    blockers
        .iter()
        .filter(|b| {
            let inflated = CylinderBlocker {
                base_center: b.base_center - Vec3::new(0.0, 0.0, grow),
                diameter: b.diameter + 2.0 * grow,
                height: b.height + 2.0 * grow,
            };
            segment_hits_cylinder(s, center, &inflated) || segment_hits_cylinder(center, r, &inflated)
        })
        .copied()
        .collect()
}

/// Outcome of one mirror-array configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisReport {
    /// Sum of configured path gains per wall.
    pub per_wall_gain: Vec<(Wall, f64)>,
    pub total_gain: f64,
    /// Mirrors that passed the feasibility screen and were searched.
    pub mirrors_searched: usize,
    /// Mirrors with a nonzero configured path.
    pub mirrors_active: usize,
    pub evaluations: usize,
}

/// Result of searching one mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSetting {
    pub yaw: f64,
    pub roll: f64,
    pub gain: f64,
    pub evaluations: usize,
}

/// Per-mirror constants for the search objective.
struct MirrorSearch {
    s: Vec3,
    r: Vec3,
    c: Vec3,
    n0: Vec3,
    t0: Vec3,
    b0: Vec3,
    half_width: f64,
    half_height: f64,
    src_dir: Vec3,
    rx_dir: Vec3,
    to_rx: Vec3,
    from_src: Vec3,
    cos_fov: f64,
    order: f64,
    scale: f64,
    blockers: Vec<CylinderBlocker>,
}

impl MirrorSearch {
    fn new(
        src: &LedSource,
        base: &RectPatch,
        reflectivity: f64,
        rx: &Receiver,
        blockers: Vec<CylinderBlocker>,
    ) -> Self {
        let s = src.position();
        let r = rx.position();
        let c = base.center;
        let m = src.lambertian_order;
        MirrorSearch {
            s,
            r,
            c,
            n0: base.normal,
            t0: base.tangent,
            b0: base.bitangent(),
            half_width: base.half_width,
            half_height: base.half_height,
            src_dir: src.pose.boresight,
            rx_dir: rx.pose.boresight,
            to_rx: (r - c).normalized(),
            from_src: (c - s).normalized(),
            cos_fov: rx.detector.cos_fov(),
            order: m,
            scale: reflectivity * (m + 1.0) * rx.detector.collection_area() / (2.0 * PI),
            blockers,
        }
    }

    /// Path gain where positive, otherwise minus a misalignment measure that
    /// grows with [`alignment_error`].
    fn objective(&self, yaw: f64, roll: f64) -> f64 {
        let (sy, cy) = yaw.sin_cos();
        let (sr, cr) = roll.sin_cos();
        let n = (self.n0 * cy + self.t0 * sy) * cr + self.b0 * sr;
        let ds = (self.s - self.c).dot(n);
        let dr = (self.r - self.c).dot(n);
        let misalignment = || 1.0 - self.from_src.reflect_direction(n).dot(self.to_rx);
        if ds <= 0.0 || dr <= 0.0 {
            return -(2.0 + misalignment());
        }
        let image = self.s - n * (2.0 * ds);
        let q = image + (self.r - image) * (ds / (ds + dr));
        let rel = q - self.c;
        let tangent = self.t0 * cy - self.n0 * sy;
        let u = rel.dot(tangent);
        let v = rel.dot(n.cross(tangent));
        if u.abs() > self.half_width || v.abs() > self.half_height {
            return -misalignment();
        }
        let leg1 = q - self.s;
        let d1 = leg1.norm();
        let leg2 = self.r - q;
        let d2 = leg2.norm();
        let cos_emit = self.src_dir.dot(leg1) / d1;
        let cos_incid = -self.rx_dir.dot(leg2) / d2;
        if !(cos_emit > 0.0 && cos_incid > 0.0 && cos_incid >= self.cos_fov)
            || segment_blocked(self.s, q, &self.blockers)
            || segment_blocked(q, self.r, &self.blockers)
        {
            return -misalignment();
        }
        let d = d1 + d2;
        self.scale * cos_pow(cos_emit, self.order) * cos_incid / (d * d)
    }
}

/// Orients a single mirror toward the receiver with the sine-cosine search.
///
/// The search objective is the path gain where it is positive and a negated
/// misalignment (monotone in [`alignment_error`]) elsewhere, so the search is
/// pulled toward the aligned region instead of wandering on a flat zero
/// plateau. The result never has lower gain than the mounted orientation
/// `(0, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn configure_mirror<R: Rng + ?Sized>(
    src: &LedSource,
    base: &RectPatch,
    reflectivity: f64,
    rx: &Receiver,
    blockers: &[CylinderBlocker],
    cfg: &OptimizerConfig,
    max_tilt: f64,
    rng: &mut R,
) -> MirrorSetting {
    let nearby = relevant_blockers(
        src.position(),
        base.center,
        rx.position(),
        base.half_diagonal(),
        blockers,
    );
    search_mirror(src, base, reflectivity, rx, nearby, cfg, max_tilt, rng)
}

#[allow(clippy::too_many_arguments)]
fn search_mirror<R: Rng + ?Sized>(
    src: &LedSource,
    base: &RectPatch,
    reflectivity: f64,
    rx: &Receiver,
    nearby: Vec<CylinderBlocker>,
    cfg: &OptimizerConfig,
    max_tilt: f64,
    rng: &mut R,
) -> MirrorSetting {
    let gain_at = |yaw: f64, roll: f64, nearby: &[CylinderBlocker]| {
        let patch = oriented_patch(base, yaw, roll);
        ris_path_gain_for_patch(src, &patch, reflectivity, rx, nearby)
    };
    let default_gain = gain_at(0.0, 0.0, &nearby);
    let search = MirrorSearch::new(src, base, reflectivity, rx, nearby);
    let params = ScaParams::new(cfg, vec![-max_tilt; 2], vec![max_tilt; 2]);
    let outcome = sca_optimize(&params, |x: &[f64]| search.objective(x[0], x[1]), rng);
    let evaluations = outcome.evaluations + 1;
    let found = if outcome.value > 0.0 {
        gain_at(outcome.best[0], outcome.best[1], &search.blockers)
    } else {
        0.0
    };
    if found > default_gain {
        MirrorSetting {
            yaw: outcome.best[0],
            roll: outcome.best[1],
            gain: found,
            evaluations,
        }
    } else {
        MirrorSetting {
            yaw: 0.0,
            roll: 0.0,
            gain: default_gain,
            evaluations,
        }
    }
}

/// Earlier searches of one mirror, keyed by the nearby blockers they saw.
type MemoEntries = Vec<(Vec<CylinderBlocker>, MirrorSetting)>;

/// Mirror searches remembered across scenes that differ only in blockers.
///
/// A mirror's search depends on the LED, the receiver, its random stream and
/// the blockers near its paths. When a later call sees the same scope and the
/// same nearby blockers, the earlier result is reused verbatim. Any change of
/// LED, receiver or seed clears the memo.
#[derive(Debug, Default, Clone)]
pub struct MirrorMemo {
    scope: Option<(LedSource, Receiver, u64, u64)>,
    entries: HashMap<(usize, usize), MemoEntries>,
    /// Searches answered from the memo.
    pub hits: usize,
}

impl MirrorMemo {
    fn enter(&mut self, src: &LedSource, rx: &Receiver, seed: u64, max_tilt: f64) {
        let scope = Some((*src, *rx, seed, max_tilt.to_bits()));
        if self.scope != scope {
            self.scope = scope;
            self.entries.clear();
        }
    }
}

/// Configures every mirror independently for the receiver `rx`.
///
/// Per-mirror gains add and do not interact, so each mirror is searched on
/// its own two-angle box. Mirrors that cannot reach the receiver at any
/// allowed tilt are reset to the mounted orientation without searching.
/// Mirror `k` of array `a` draws from its own stream keyed by `seed`.
pub fn configure_ris(
    arrays: &mut [RisArray],
    src: &LedSource,
    rx: &Receiver,
    blockers: &[CylinderBlocker],
    cfg: &OptimizerConfig,
    max_tilt: f64,
    seed: u64,
) -> RisReport {
    configure_ris_with_memo(arrays, src, rx, blockers, cfg, max_tilt, seed, None)
}

/// [`configure_ris`] reusing and extending `memo`.
#[allow(clippy::too_many_arguments)]
pub fn configure_ris_with_memo(
    arrays: &mut [RisArray],
    src: &LedSource,
    rx: &Receiver,
    blockers: &[CylinderBlocker],
    cfg: &OptimizerConfig,
    max_tilt: f64,
    seed: u64,
    mut memo: Option<&mut MirrorMemo>,
) -> RisReport {
    if let Some(m) = memo.as_deref_mut() {
        m.enter(src, rx, seed, max_tilt);
    }
    let mut per_wall_gain = Vec::with_capacity(arrays.len());
    let mut total_gain = 0.0;
    let mut mirrors_searched = 0;
    let mut mirrors_active = 0;
    let mut evaluations = 0;
    for (a, array) in arrays.iter_mut().enumerate() {
        let mut wall_gain = 0.0;
        for (k, mirror) in array.mirrors.iter_mut().enumerate() {
            mirror.yaw = 0.0;
            mirror.roll = 0.0;
            if mirror.reflectivity <= 0.0 || !mirror_may_contribute(src, &mirror.patch, rx, max_tilt) {
                continue;
            }
            let nearby = relevant_blockers(
                src.position(),
                mirror.patch.center,
                rx.position(),
                mirror.patch.half_diagonal(),
                blockers,
            );
            let remembered = memo.as_deref_mut().and_then(|m| {
                let hit = m
                    .entries
                    .get(&(a, k))?
                    .iter()
                    .find(|(b, _)| *b == nearby)
                    .map(|(_, s)| *s);
                m.hits += usize::from(hit.is_some());
                hit
            });
            let setting = match remembered {
                Some(s) => s,
                None => {
                    let mut rng = search_rng(seed, Stream::Mirrors, ((a as u64) << 32) | k as u64);
                    let s = search_mirror(
                        src,
                        &mirror.patch,
                        mirror.reflectivity,
                        rx,
                        nearby.clone(),
                        cfg,
                        max_tilt,
                        &mut rng,
                    );
                    if let Some(m) = memo.as_deref_mut() {
                        m.entries.entry((a, k)).or_default().push((nearby, s));
                    }
                    s
                }
            };
            mirror.yaw = setting.yaw;
            mirror.roll = setting.roll;
            mirrors_searched += 1;
            evaluations += setting.evaluations;
            if setting.gain > 0.0 {
                mirrors_active += 1;
                wall_gain += setting.gain;
            }
        }
        per_wall_gain.push((array.wall, wall_gain));
        total_gain += wall_gain;
    }
    RisReport {
        per_wall_gain,
        total_gain,
        mirrors_searched,
        mirrors_active,
        evaluations,
    }
}
