//! Link budget of an upward-facing receiver directly under a ceiling LED.

use mapvlc::channel::los_gain;
use mapvlc::geometry::{Pose, Vec3};
use mapvlc::ExperimentConfig;

fn main() -> mapvlc::Result<()> {
    let cfg = ExperimentConfig::default();
    let link = cfg.channel.link_budget();
    let led = link.led(Pose::downward(Vec3::new(5.0, 5.0, 3.0)));
    let rx = link.receiver(Pose::new(Vec3::new(5.0, 5.0, 0.75), Vec3::UP));

    let h = los_gain(&led, &rx, &[])?;
    println!("concentrator gain g  = {:.6}", rx.detector.concentrator_gain());
    println!("LoS channel gain H   = {h:.6e}");
    println!("electrical SNR       = {:.3}", link.snr(h));
    println!("rate                 = {:.2} Mbps", link.rate(h) / 1e6);

    // walk the receiver sideways until the LED leaves the field of view
    for dx in [0.5, 1.0, 2.0, 4.0, 6.5] {
        let rx = link.receiver(Pose::new(Vec3::new(5.0 + dx, 5.0, 0.75), Vec3::UP));
        let h = los_gain(&led, &rx, &[])?;
        println!("offset {dx:>4} m: H = {h:.3e}, rate = {:.1} Mbps", link.rate(h) / 1e6);
    }
    Ok(())
}
