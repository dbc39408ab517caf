//! Desk-scale simulator for indoor visible light communication with movable
//! access points.
//!
//! A single user walks through a room with cylindrical blockers while holding
//! a randomly tilted photodetector. Four downlink systems are compared:
//!
//! * `map_aided`: an LED on a ceiling track, moved to the best candidate point
//!   every slot,
//! * `fixed_ap`: one LED at the ceiling center,
//! * `ris_aided`: the center LED plus steerable mirror arrays on all four walls,
//! * `ris_only`: the mirror paths alone.
//!
//! The modules build on each other bottom-up: [`geometry`] → [`channel`] →
//! [`scenario`] → [`optimize`] → [`montecarlo`], with [`config`] describing a
//! run and [`cli`] exposing `validate`, `run` and `trace`.
//!
//! ```
//! use mapvlc::channel::{los_gain, LedSource, PhotoDetector, Receiver};
//! use mapvlc::geometry::{Pose, Vec3};
//!
//! let led = LedSource::new(Pose::downward(Vec3::new(5.0, 5.0, 3.0)), 1.0, 60.0);
//! let rx = Receiver::new(Pose::new(Vec3::new(5.0, 5.0, 0.75), Vec3::UP), PhotoDetector::default());
//! let h = los_gain(&led, &rx, &[]).unwrap();
//! assert!((h - 1.602e-5).abs() < 1e-8);
//! ```

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod optimize;
pub mod scenario;
pub mod seeding;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use montecarlo::{Experiment, SweepResult, SystemModel};
