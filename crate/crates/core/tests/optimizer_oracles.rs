mod common;

use common::{angle_grid_max, feasible_mirror_cases, max_scan};
use mapvlc::channel::{build_wall_arrays, ris_path_gain, MirrorElement, PhotoDetector, Receiver, RisLayout, Wall};
use mapvlc::config::OptimizerConfig;
use mapvlc::geometry::{Pose, RectPatch, Vec3};
use mapvlc::optimize::{
    configure_mirror, configure_ris, map_rate, place_map_exhaustive, place_map_per_slot, sca_optimize, ScaParams,
};
use mapvlc::scenario::{build_track, generate_realization, Room, TrackAnchoring, TrackConfig, TrackGrid, TrackLayout};
use mapvlc::seeding::instance_seed;
use mapvlc::ExperimentConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_TILT: f64 = std::f64::consts::FRAC_PI_3;

#[test]
fn exhaustive_placement_equals_max_scan_on_random_worlds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for world in 0..100 {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.blockers = rng.gen_range(0..=32);
        let real = generate_realization(&cfg, rng.gen()).unwrap();
        let slot = rng.gen_range(0..real.slots());
        let link = cfg.channel.link_budget();
        let rx = link.receiver(real.user_states[slot].device_pose());
        let occ = real.occluders(slot);
        let rates: Vec<f64> = real
            .track
            .candidate_points
            .iter()
            .map(|&p| map_rate(p, &rx, &occ, &link).unwrap())
            .collect();
        let placed = place_map_exhaustive(&real.track, |p| map_rate(p, &rx, &occ, &link)).unwrap();
        let (index, value) = max_scan(&rates);
        assert_eq!(placed.chosen_index, index, "world {world}");
        assert_eq!(placed.objective, value, "world {world}");
        assert_eq!(placed.evaluations, rates.len());
        let again = map_rate(placed.chosen_point, &rx, &occ, &link).unwrap();
        assert!((again - placed.objective).abs() <= 1e-9 * placed.objective.max(1.0));
    }
}

#[test]
fn overhead_user_picks_a_nearest_grid_point() {
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.blockers = 0;
    let link = cfg.channel.link_budget();
    let rx = link.receiver(Pose::new(Vec3::new(5.0, 5.0, 0.75), Vec3::UP));
    let track = build_track(TrackLayout::Grid, &Room::default(), 10, TrackAnchoring::CellCentered).unwrap();
    let placed = place_map_exhaustive(&track, |p| map_rate(p, &rx, &[], &link)).unwrap();
    let nearest = track
        .candidate_points
        .iter()
        .map(|p| p.horizontal_distance(Vec3::new(5.0, 5.0, 0.0)))
        .fold(f64::INFINITY, f64::min);
    assert!((placed.chosen_point.horizontal_distance(Vec3::new(5.0, 5.0, 0.0)) - nearest).abs() < 1e-12);
}

#[test]
fn all_blocked_candidates_fall_back_to_index_zero() {
    let track = build_track(TrackLayout::Grid, &Room::default(), 4, TrackAnchoring::CellCentered).unwrap();
    let placed = place_map_exhaustive(&track, |_| Ok(0.0)).unwrap();
    assert_eq!((placed.chosen_index, placed.objective), (0, 0.0));
}

#[test]
fn per_slot_placement_dominates_holding_the_first_point() {
    let cfg = ExperimentConfig::default();
    let link = cfg.channel.link_budget();
    for k in 0..20 {
        let real = generate_realization(&cfg, instance_seed(5, k)).unwrap();
        let placements = place_map_per_slot(&real.track, &real, &link).unwrap();
        let held = placements[0].chosen_point;
        for (slot, p) in placements.iter().enumerate() {
            let rx = link.receiver(real.user_states[slot].device_pose());
            let stay = map_rate(held, &rx, &real.occluders(slot), &link).unwrap();
            assert!(p.objective >= stay);
        }
    }
}

#[test]
fn injected_center_point_dominates_the_fixed_ap() {
    let mut cfg = ExperimentConfig::default();
    cfg.track.include_center = true;
    let link = cfg.channel.link_budget();
    for k in 0..20 {
        let real = generate_realization(&cfg, instance_seed(6, k)).unwrap();
        for (slot, p) in place_map_per_slot(&real.track, &real, &link)
            .unwrap()
            .iter()
            .enumerate()
        {
            let rx = link.receiver(real.user_states[slot].device_pose());
            let fixed = map_rate(real.room.ceiling_center(), &rx, &real.occluders(slot), &link).unwrap();
            assert!(p.objective >= fixed);
        }
    }
}

#[test]
fn nested_candidate_sets_never_lose() {
    let cfg = ExperimentConfig::default();
    let link = cfg.channel.link_budget();
    let grids: Vec<TrackGrid> = [5, 9, 17, 33]
        .iter()
        .map(|&r| {
            TrackGrid::from_config(
                &TrackConfig {
                    layout: TrackLayout::Grid,
                    resolution: r,
                    anchoring: TrackAnchoring::CornerInclusive,
                    include_center: false,
                },
                &Room::default(),
            )
            .unwrap()
        })
        .collect();
    for k in 0..10 {
        let real = generate_realization(&cfg, instance_seed(8, k)).unwrap();
        for slot in 0..real.slots() {
            let rx = link.receiver(real.user_states[slot].device_pose());
            let occ = real.occluders(slot);
            let values: Vec<f64> = grids
                .iter()
                .map(|g| {
                    place_map_exhaustive(g, |p| map_rate(p, &rx, &occ, &link))
                        .unwrap()
                        .objective
                })
                .collect();
            assert!(values.windows(2).all(|w| w[1] >= w[0]), "{values:?}");
        }
    }
}

#[test]
fn sca_reaches_the_sphere_optimum() {
    let params = ScaParams::new(&OptimizerConfig::default(), vec![-1.0; 2], vec![1.0; 2]);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = sca_optimize(&params, |x| -(x[0] * x[0] + x[1] * x[1]), &mut rng);
        assert!(out.value >= -1e-2, "seed {seed}: {}", out.value);
    }
}

#[test]
fn sca_matches_the_angle_grid_oracle() {
    let cfg = OptimizerConfig::default();
    for (i, (case, grid_best)) in feasible_mirror_cases(0x5CA, 20, 360, MAX_TILT).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let s = configure_mirror(&case.src, &case.base, 0.95, &case.rx, &[], &cfg, MAX_TILT, &mut rng);
        assert!(s.gain >= 0.95 * grid_best, "case {i}: {} vs grid {}", s.gain, grid_best);
        let m = MirrorElement::new(case.base, 0.95).with_orientation(s.yaw, s.roll);
        assert_eq!(ris_path_gain(&case.src, &m, &case.rx, &[]), s.gain);
    }
}

#[test]
fn symmetric_geometry_keeps_the_mounted_orientation() {
    let base = RectPatch {
        center: Vec3::new(0.0, 5.0, 1.5),
        normal: Vec3::new(1.0, 0.0, 0.0),
        tangent: Vec3::new(0.0, 1.0, 0.0),
        half_width: 0.05,
        half_height: 0.05,
    };
    let src = mapvlc::channel::LedSource::new(
        Pose::new(Vec3::new(2.0, 5.0, 3.0), Vec3::new(-0.5, 0.0, -1.0)),
        1.0,
        60.0,
    );
    let rx_pos = Vec3::new(2.0, 5.0, 0.0);
    let rx = Receiver::new(Pose::new(rx_pos, base.center - rx_pos), PhotoDetector::default());
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = configure_mirror(
            &src,
            &base,
            0.95,
            &rx,
            &[],
            &OptimizerConfig::default(),
            MAX_TILT,
            &mut rng,
        );
        assert!(s.gain > 0.0);
        assert!(
            s.yaw.abs() <= 2f64.to_radians() && s.roll.abs() <= 2f64.to_radians(),
            "{s:?}"
        );
    }
    let (_, _, grid) = angle_grid_max(360, MAX_TILT, |y, r| {
        ris_path_gain(&src, &MirrorElement::new(base, 0.95).with_orientation(y, r), &rx, &[])
    });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s = configure_mirror(
        &src,
        &base,
        0.95,
        &rx,
        &[],
        &OptimizerConfig::default(),
        MAX_TILT,
        &mut rng,
    );
    assert!(s.gain >= 0.95 * grid);
}

#[test]
fn blocked_receiver_leaves_mirror_dark() {
    let base = RectPatch {
        center: Vec3::new(0.0, 5.0, 1.5),
        normal: Vec3::new(1.0, 0.0, 0.0),
        tangent: Vec3::new(0.0, 1.0, 0.0),
        half_width: 0.05,
        half_height: 0.05,
    };
    let src = mapvlc::channel::LedSource::new(Pose::downward(Vec3::new(5.0, 5.0, 3.0)), 1.0, 60.0);
    let rx = Receiver::new(
        Pose::new(Vec3::new(2.0, 5.0, 0.75), Vec3::new(-1.0, 0.0, 0.3)),
        PhotoDetector::default(),
    );
    // a wide, tall cylinder between the wall and the receiver
    let wall = mapvlc::geometry::CylinderBlocker::new(1.0, 5.0, 1.2, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = configure_mirror(
        &src,
        &base,
        0.95,
        &rx,
        &[wall],
        &OptimizerConfig::default(),
        MAX_TILT,
        &mut rng,
    );
    assert_eq!(s.gain, 0.0);
    assert_eq!((s.yaw, s.roll), (0.0, 0.0));
}

#[test]
fn configured_arrays_beat_random_orientations() {
    let cfg = ExperimentConfig::default();
    let link = cfg.channel.link_budget();
    let real = generate_realization(&cfg, instance_seed(12, 0)).unwrap();
    let led = link.led(Pose::downward(real.room.ceiling_center()));
    let rx = link.receiver(real.user_states[0].device_pose());
    let occ = real.occluders(0);
    let layout = RisLayout {
        walls: vec![Wall::West, Wall::South],
        ..RisLayout::default()
    };
    let mut arrays = build_wall_arrays(&real.room, &layout);
    let mounted: f64 = arrays
        .iter()
        .flat_map(|a| &a.mirrors)
        .map(|m| ris_path_gain(&led, m, &rx, &occ))
        .sum();
    let report = configure_ris(&mut arrays, &led, &rx, &occ, &cfg.optimizer, MAX_TILT, 77);
    let configured: f64 = arrays
        .iter()
        .flat_map(|a| &a.mirrors)
        .map(|m| ris_path_gain(&led, m, &rx, &occ))
        .sum();
    assert!((configured - report.total_gain).abs() <= 1e-12 * configured.max(1e-300));
    assert!(configured >= mounted);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let random: f64 = arrays
            .iter()
            .flat_map(|a| &a.mirrors)
            .map(|m| {
                let m = m.with_orientation(rng.gen_range(-MAX_TILT..MAX_TILT), rng.gen_range(-MAX_TILT..MAX_TILT));
                ris_path_gain(&led, &m, &rx, &occ)
            })
            .sum();
        assert!(configured >= random);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sca_history_never_decreases(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64, pop in 2usize..20, iters in 1usize..60) {
        let cfg = OptimizerConfig { population: pop, iterations: iters, amplitude: 2.0 };
        let params = ScaParams::new(&cfg, vec![-4.0; 2], vec![4.0; 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = sca_optimize(&params, |x| (a * x[0]).sin() * (b * x[1]).cos() - 0.01 * x[0] * x[0], &mut rng);
        prop_assert_eq!(out.history.len(), iters + 1);
        prop_assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(*out.history.last().unwrap(), out.value);
        prop_assert_eq!(out.evaluations, pop * (iters + 1));
        prop_assert!(out.best.iter().all(|v| (-4.0..=4.0).contains(v)));
    }
}
