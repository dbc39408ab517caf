//! Mean rate versus the number of blockers in the room, at the blocker-sweep
//! power.
//!
//! `cargo run --release --example blocker_sweep -- 10`

use mapvlc::montecarlo::sweep_blockers;
use mapvlc::{ExperimentConfig, SystemModel};

fn main() -> mapvlc::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.instances = instances;

    let result = sweep_blockers(&cfg)?;
    println!("{}", result.summary_table());

    let counts = result.sweep_values();
    let (first, last) = (counts[0], counts[counts.len() - 1]);
    let ratio = |k| result.mean(SystemModel::MapAided, k).unwrap() / result.mean(SystemModel::RisAided, k).unwrap();
    println!(
        "MAP / RIS-aided: {:.3} at {first} blockers, {:.3} at {last}",
        ratio(first),
        ratio(last)
    );
    Ok(())
}
