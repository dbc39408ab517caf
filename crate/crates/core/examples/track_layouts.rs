//! Candidate ceiling points of every track layout, and the best MAP rate
//! each offers to one sampled user.

use mapvlc::optimize::{map_rate, place_map_exhaustive};
use mapvlc::scenario::{build_track, generate_realization, TrackAnchoring, TrackLayout};
use mapvlc::ExperimentConfig;

fn main() -> mapvlc::Result<()> {
    let cfg = ExperimentConfig::default();
    let real = generate_realization(&cfg, 7)?;
    let link = cfg.channel.link_budget();
    let rx = link.receiver(real.user_states[0].device_pose());
    let occ = real.occluders(0);
    let u = real.user_states[0].device_position;
    println!("device at ({:.2}, {:.2}, {:.2})", u.x, u.y, u.z);

    for layout in [
        TrackLayout::Grid,
        TrackLayout::Linear,
        TrackLayout::TShape,
        TrackLayout::UShape,
        TrackLayout::Circular,
    ] {
        let resolution = if layout == TrackLayout::Grid { 10 } else { 40 };
        let track = build_track(layout, &real.room, resolution, TrackAnchoring::CellCentered)?;
        let placed = place_map_exhaustive(&track, |p| map_rate(p, &rx, &occ, &link))?;
        let p = placed.chosen_point;
        println!(
            "{layout:?}: {} points, best at ({:.2}, {:.2}), {:.1} Mbps",
            track.len(),
            p.x,
            p.y,
            placed.objective / 1e6
        );
    }
    Ok(())
}
