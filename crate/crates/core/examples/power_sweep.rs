//! Mean rate of every system versus LED power, on a reduced campaign.
//!
//! `cargo run --release --example power_sweep -- 20`

use std::time::Instant;

use mapvlc::montecarlo::sweep_power;
use mapvlc::ExperimentConfig;

fn main() -> mapvlc::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.instances = instances;

    let start = Instant::now();
    let result = sweep_power(&cfg)?;
    println!("{}", result.summary_table());
    println!("{instances} instances in {:.1?}", start.elapsed());
    Ok(())
}
