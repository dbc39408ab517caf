//! Steers one wall mirror toward a receiver with the sine-cosine search and
//! compares the result with a brute-force angle scan.

use mapvlc::channel::{build_wall_arrays, ris_path_gain, RisLayout, Wall};
use mapvlc::geometry::{Pose, Vec3};
use mapvlc::optimize::configure_mirror;
use mapvlc::ExperimentConfig;
use rand::SeedableRng;

fn main() {
    let cfg = ExperimentConfig::default();
    let link = cfg.channel.link_budget();
    let led = link.led(Pose::downward(Vec3::new(5.0, 5.0, 3.0)));
    let rx_pos = Vec3::new(2.0, 4.0, 0.75);
    let rx = link.receiver(Pose::new(rx_pos, Vec3::new(-0.4, 0.0, 1.0).normalized()));

    let layout = RisLayout {
        walls: vec![Wall::West],
        ..cfg.ris.clone()
    };
    let array = build_wall_arrays(&cfg.room, &layout).remove(0);
    let mirror = array.mirrors[array.mirrors.len() / 2];
    let max_tilt = cfg.ris.max_tilt_deg.to_radians();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let s = configure_mirror(
        &led,
        &mirror.patch,
        mirror.reflectivity,
        &rx,
        &[],
        &cfg.optimizer,
        max_tilt,
        &mut rng,
    );
    println!(
        "search: yaw {:.2} deg, roll {:.2} deg, gain {:.4e} after {} evaluations",
        s.yaw.to_degrees(),
        s.roll.to_degrees(),
        s.gain,
        s.evaluations
    );

    let n = 241;
    let step = 2.0 * max_tilt / (n - 1) as f64;
    let mut best = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (yaw, roll) = (-max_tilt + i as f64 * step, -max_tilt + j as f64 * step);
            let g = ris_path_gain(&led, &mirror.with_orientation(yaw, roll), &rx, &[]);
            if g > best.2 {
                best = (yaw, roll, g);
            }
        }
    }
    println!(
        "scan:   yaw {:.2} deg, roll {:.2} deg, gain {:.4e} after {} evaluations",
        best.0.to_degrees(),
        best.1.to_degrees(),
        best.2,
        n * n
    );
}
