//! One sampled realization: user walk, device orientation and blockers.

use mapvlc::scenario::generate_realization;
use mapvlc::ExperimentConfig;

fn main() -> mapvlc::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = ExperimentConfig::default();
    let real = generate_realization(&cfg, seed)?;

    println!("slot  position        speed  polar  waypoint");
    for (k, u) in real.user_states.iter().enumerate() {
        let p = u.position();
        let polar = u.device_normal.z.clamp(-1.0, 1.0).acos().to_degrees();
        println!(
            "{k:>4}  ({:.2}, {:.2})  {:.2}   {:>5.1}  ({:.2}, {:.2})",
            p.x, p.y, u.speed, polar, u.waypoint.x, u.waypoint.y
        );
    }
    println!("{} blockers:", real.blockers.len());
    for b in &real.blockers {
        println!(
            "  ({:.2}, {:.2}) d {:.2} h {:.2}",
            b.base_center.x, b.base_center.y, b.diameter, b.height
        );
    }
    Ok(())
}
