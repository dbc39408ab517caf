//! Per-slot mean rate while the user walks from a room corner to the center.
//!
//! `cargo run --release --example mobility_path -- 10`

use mapvlc::montecarlo::sweep_mobility;
use mapvlc::{ExperimentConfig, SystemModel};

fn main() -> mapvlc::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.instances = instances;

    let result = sweep_mobility(&cfg)?;
    println!("{}", result.summary_table());

    let map: Vec<f64> = result
        .sweep_values()
        .iter()
        .map(|&s| result.mean(SystemModel::MapAided, s).unwrap())
        .collect();
    let mean = map.iter().sum::<f64>() / map.len() as f64;
    let sd = (map.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / map.len() as f64).sqrt();
    println!("MAP coefficient of variation across slots: {:.2}%", 100.0 * sd / mean);
    Ok(())
}
