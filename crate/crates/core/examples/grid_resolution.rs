//! MAP mean rate and placement cost over nested corner-inclusive grids.
//!
//! `cargo run --release --example grid_resolution -- 50`

use mapvlc::montecarlo::sweep_grid;
use mapvlc::scenario::TrackAnchoring;
use mapvlc::{ExperimentConfig, SystemModel};

fn main() -> mapvlc::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.instances = instances;
    cfg.experiment.models = vec![SystemModel::MapAided];
    cfg.experiment.grid_resolutions = vec![5, 9, 17, 33, 65];
    cfg.experiment.grid_anchoring = TrackAnchoring::CornerInclusive;

    let result = sweep_grid(&cfg)?;
    for t in &result.timing {
        let mean = result.mean(SystemModel::MapAided, t.resolution as f64).unwrap();
        println!(
            "{:>3}x{:<3} {:>5} points  {:>8.3} Mbps  {:>9} evaluations  {:.3} s",
            t.resolution,
            t.resolution,
            t.candidates,
            mean / 1e6,
            t.evaluations,
            t.elapsed.as_secs_f64()
        );
    }
    Ok(())
}
