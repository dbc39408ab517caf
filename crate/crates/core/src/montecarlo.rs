//! Seeded experiment campaigns over the four system models.
//!
//! Instance `k` of every model and every sweep value shares one realization
//! seed, so model comparisons are paired. Instances run on the ambient rayon
//! pool and are merged by index, so the worker count never changes results.

use std::fmt;
use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_wall_arrays, los_gain, LinkBudget, RisArray};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::geometry::Pose;
use crate::optimize::{configure_ris_with_memo, place_map_per_slot, MirrorMemo, RisReport};
use crate::scenario::{corner_to_center_path, generate_realization, ScenarioRealization, TrackConfig, TrackLayout};
use crate::seeding::{derive_seed, instance_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemModel {
    /// LED on the ceiling track, repositioned every slot; no mirrors.
    MapAided,
    /// Center LED plus the wall mirror arrays, direct path included.
    RisAided,
    /// Center LED only.
    FixedAp,
    /// Center LED reaching the user through the mirrors only.
    RisOnly,
}

impl SystemModel {
    pub const ALL: [SystemModel; 4] = [
        SystemModel::MapAided,
        SystemModel::RisAided,
        SystemModel::FixedAp,
        SystemModel::RisOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemModel::MapAided => "map_aided",
            SystemModel::RisAided => "ris_aided",
            SystemModel::FixedAp => "fixed_ap",
            SystemModel::RisOnly => "ris_only",
        }
    }

    pub fn uses_ris(self) -> bool {
        matches!(self, SystemModel::RisAided | SystemModel::RisOnly)
    }

    pub fn uses_center_los(self) -> bool {
        matches!(self, SystemModel::RisAided | SystemModel::FixedAp)
    }
}

impl fmt::Display for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Power,
    Blockers,
    Mobility,
    Grid,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Power => "power",
            Experiment::Blockers => "blockers",
            Experiment::Mobility => "mobility",
            Experiment::Grid => "grid",
        }
    }

    pub fn sweep_variable(self) -> &'static str {
        match self {
            Experiment::Power => "transmit_power_w",
            Experiment::Blockers => "blockers",
            Experiment::Mobility => "slot",
            Experiment::Grid => "grid_resolution",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    pub code_version: String,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Provenance {
            config_hash: cfg.canonical_hash(),
            master_seed: cfg.experiment.master_seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// All rates for one (model, sweep value).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub model: SystemModel,
    pub sweep_value: f64,
    /// Slot index of the first rate in each instance row.
    pub first_slot: usize,
    /// `instance_rates[k]` holds the per-slot rates of instance `k`, bits/s.
    pub instance_rates: Vec<Vec<f64>>,
    pub mean_bps: f64,
    pub stderr_bps: f64,
}

impl SweepPoint {
    fn new(model: SystemModel, sweep_value: f64, first_slot: usize, instance_rates: Vec<Vec<f64>>) -> Self {
        let means = instance_means(&instance_rates);
        let (mean_bps, stderr_bps) = mean_and_stderr(&means);
        SweepPoint {
            model,
            sweep_value,
            first_slot,
            instance_rates,
            mean_bps,
            stderr_bps,
        }
    }

    pub fn instance_means(&self) -> Vec<f64> {
        instance_means(&self.instance_rates)
    }

    /// Mean over instances of the rate in the `k`-th stored slot.
    pub fn slot_mean(&self, k: usize) -> f64 {
        let n = self.instance_rates.len() as f64;
        self.instance_rates.iter().map(|r| r[k]).sum::<f64>() / n
    }
}

fn instance_means(rates: &[Vec<f64>]) -> Vec<f64> {
    rates.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Wall time and work of the exhaustive placement at one grid resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTiming {
    pub resolution: usize,
    pub candidates: usize,
    pub evaluations: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub points: Vec<SweepPoint>,
    pub provenance: Provenance,
    pub timing: Vec<GridTiming>,
}

impl SweepResult {
    pub fn point(&self, model: SystemModel, sweep_value: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.model == model && p.sweep_value == sweep_value)
    }

    pub fn mean(&self, model: SystemModel, sweep_value: f64) -> Option<f64> {
        self.point(model, sweep_value).map(|p| p.mean_bps)
    }

    pub fn models(&self) -> Vec<SystemModel> {
        let mut m: Vec<SystemModel> = Vec::new();
        for p in &self.points {
            if !m.contains(&p.model) {
                m.push(p.model);
            }
        }
        m
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for p in &self.points {
            if !v.contains(&p.sweep_value) {
                v.push(p.sweep_value);
            }
        }
        v
    }

    /// Columns `model,sweep_value,instance,slot,rate_bps`.
    pub fn write_rates_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "sweep_value", "instance", "slot", "rate_bps"])?;
        for p in &self.points {
            for (k, rates) in p.instance_rates.iter().enumerate() {
                for (j, rate) in rates.iter().enumerate() {
                    w.write_record([
                        p.model.name().to_string(),
                        p.sweep_value.to_string(),
                        k.to_string(),
                        (p.first_slot + j).to_string(),
                        rate.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Columns `model,sweep_value,mean_bps,stderr_bps`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "sweep_value", "mean_bps", "stderr_bps"])?;
        for p in &self.points {
            w.write_record([
                p.model.name().to_string(),
                p.sweep_value.to_string(),
                p.mean_bps.to_string(),
                p.stderr_bps.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Columns `resolution,candidates,evaluations,elapsed_s`. Not deterministic.
    pub fn write_timing_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["resolution", "candidates", "evaluations", "elapsed_s"])?;
        for t in &self.timing {
            w.write_record([
                t.resolution.to_string(),
                t.candidates.to_string(),
                t.evaluations.to_string(),
                t.elapsed.as_secs_f64().to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Plain-text table of mean rates in Mbps, models as rows.
    pub fn summary_table(&self) -> String {
        let values = self.sweep_values();
        let mut s = format!("{:<12}", self.experiment.sweep_variable());
        for v in &values {
            s.push_str(&format!("{:>12}", v));
        }
        s.push('\n');
        for m in self.models() {
            s.push_str(&format!("{:<12}", m.name()));
            for v in &values {
                match self.mean(m, *v) {
                    Some(x) => s.push_str(&format!("{:>12.2}", x / 1e6)),
                    None => s.push_str(&format!("{:>12}", "-")),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Direct and mirror gains from the center LED in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotChannels {
    pub center_los: f64,
    pub ris: Option<RisReport>,
}

impl SlotChannels {
    pub fn ris_gain(&self) -> f64 {
        self.ris.as_ref().map_or(0.0, |r| r.total_gain)
    }
}

/// Gains for the center-LED models in `slot`. Mirrors are configured only
/// when `with_ris` is set.
pub fn slot_channels(
    cfg: &ExperimentConfig,
    real: &ScenarioRealization,
    slot: usize,
    arrays: &[RisArray],
    with_ris: bool,
) -> Result<SlotChannels> {
    slot_channels_memo(cfg, real, slot, arrays, with_ris, None)
}

fn slot_channels_memo(
    cfg: &ExperimentConfig,
    real: &ScenarioRealization,
    slot: usize,
    arrays: &[RisArray],
    with_ris: bool,
    memo: Option<&mut MirrorMemo>,
) -> Result<SlotChannels> {
    let link = cfg.channel.link_budget();
    let led = link.led(Pose::downward(real.room.ceiling_center()));
    let rx = link.receiver(real.user_states[slot].device_pose());
    let occ = real.occluders(slot);
    let center_los = los_gain(&led, &rx, &occ)?;
    let ris = if with_ris {
        let mut arrays = arrays.to_vec();
        Some(configure_ris_with_memo(
            &mut arrays,
            &led,
            &rx,
            &occ,
            &cfg.optimizer,
            cfg.ris.max_tilt_deg.to_radians(),
            derive_seed(real.seed, Stream::Mirrors, slot as u64),
            memo,
        ))
    } else {
        None
    };
    Ok(SlotChannels { center_los, ris })
}

/// Per-slot rates of every model at every power: `[power][model][slot]`.
///
/// Mirror configuration maximizes gain and does not depend on power, so it
/// runs once per slot and is shared by all power levels.
fn evaluate_realization(
    cfg: &ExperimentConfig,
    real: &ScenarioRealization,
    models: &[SystemModel],
    powers: &[f64],
    mut memos: Option<&mut Vec<MirrorMemo>>,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let base = cfg.channel.link_budget();
    let need_ris = models.iter().any(|m| m.uses_ris());
    let need_center = models.iter().any(|m| m.uses_ris() || m.uses_center_los());
    let arrays = if need_ris {
        build_wall_arrays(&real.room, &cfg.ris)
    } else {
        Vec::new()
    };
    let channels = if need_center {
        (0..real.slots())
            .map(|slot| {
                let memo = memos.as_deref_mut().map(|m| {
                    if m.len() <= slot {
                        m.resize_with(slot + 1, MirrorMemo::default);
                    }
                    &mut m[slot]
                });
                slot_channels_memo(cfg, real, slot, &arrays, need_ris, memo)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    powers
        .iter()
        .map(|&p| {
            let link = base.with_power(p);
            models
                .iter()
                .map(|&m| model_rates(m, &link, real, &channels))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn model_rates(
    model: SystemModel,
    link: &LinkBudget,
    real: &ScenarioRealization,
    channels: &[SlotChannels],
) -> Result<Vec<f64>> {
    Ok(match model {
        SystemModel::MapAided => place_map_per_slot(&real.track, real, link)?
            .into_iter()
            .map(|r| r.objective)
            .collect(),
        SystemModel::FixedAp => channels.iter().map(|c| link.rate(c.center_los)).collect(),
        SystemModel::RisAided => channels
            .iter()
            .map(|c| link.rate(c.center_los + c.ris_gain()))
            .collect(),
        SystemModel::RisOnly => channels.iter().map(|c| link.rate(c.ris_gain())).collect(),
    })
}

/// Per-slot rates of one model on the random-waypoint realization for `seed`.
pub fn run_instance(model: SystemModel, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<f64>> {
    let real = generate_realization(cfg, seed)?;
    let mut rates = evaluate_realization(cfg, &real, &[model], &[cfg.channel.transmit_power_w], None)?;
    Ok(rates.remove(0).remove(0))
}

/// `results[instance][value][model]` → points ordered model-major.
fn collect_points(models: &[SystemModel], values: &[f64], results: Vec<Vec<Vec<Vec<f64>>>>) -> Vec<SweepPoint> {
    let mut points = Vec::with_capacity(models.len() * values.len());
    for (mi, &m) in models.iter().enumerate() {
        for (vi, &v) in values.iter().enumerate() {
            let rows = results.iter().map(|inst| inst[vi][mi].clone()).collect();
            points.push(SweepPoint::new(m, v, 0, rows));
        }
    }
    points
}

fn instance_indices(cfg: &ExperimentConfig) -> impl IndexedParallelIterator<Item = (usize, u64)> + '_ {
    (0..cfg.experiment.instances)
        .into_par_iter()
        .map(move |k| (k, instance_seed(cfg.experiment.master_seed, k)))
}

/// Mean rate versus transmit power. Realizations and mirror settings are
/// shared across power levels.
pub fn sweep_power(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let models = &cfg.experiment.models;
    let powers = &cfg.experiment.power_values_w;
    let results = instance_indices(cfg)
        .map(|(_, seed)| {
            let real = generate_realization(cfg, seed)?;
            evaluate_realization(cfg, &real, models, powers, None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        experiment: Experiment::Power,
        points: collect_points(models, powers, results),
        provenance: Provenance::of(cfg),
        timing: Vec::new(),
    })
}

/// Mean rate versus number of non-user blockers, at the blocker-sweep power.
///
/// Every blocker count reuses the instance's user path and orientations, so
/// mirror searches whose nearby blockers did not change are shared.
pub fn sweep_blockers(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let models = &cfg.experiment.models;
    let counts = &cfg.experiment.blocker_counts;
    let variants: Vec<ExperimentConfig> = counts
        .iter()
        .map(|&k| {
            let mut c = cfg.clone();
            c.scenario.blockers = k;
            c.channel.transmit_power_w = cfg.experiment.blocker_sweep_power_w;
            c
        })
        .collect();
    let results = instance_indices(cfg)
        .map(|(_, seed)| {
            let mut memos = Vec::new();
            variants
                .iter()
                .map(|c| {
                    let real = generate_realization(c, seed)?;
                    let mut r =
                        evaluate_realization(c, &real, models, &[c.channel.transmit_power_w], Some(&mut memos))?;
                    Ok(r.remove(0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    Ok(SweepResult {
        experiment: Experiment::Blockers,
        points: collect_points(models, &values, results),
        provenance: Provenance::of(cfg),
        timing: Vec::new(),
    })
}

/// Per-slot mean rate along the corner-to-center path. Points are indexed
/// by slot.
pub fn sweep_mobility(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let models = &cfg.experiment.models;
    let results = instance_indices(cfg)
        .map(|(_, seed)| {
            let real = corner_to_center_path(cfg, seed)?;
            let mut r = evaluate_realization(cfg, &real, models, &[cfg.channel.transmit_power_w], None)?;
            Ok(r.remove(0))
        })
        .collect::<Result<Vec<_>>>()?;
    let slots = cfg.scenario.slots;
    let mut points = Vec::with_capacity(models.len() * slots);
    for (mi, &m) in models.iter().enumerate() {
        for slot in 0..slots {
            let rows = results.iter().map(|inst| vec![inst[mi][slot]]).collect();
            points.push(SweepPoint::new(m, slot as f64, slot, rows));
        }
    }
    Ok(SweepResult {
        experiment: Experiment::Mobility,
        points,
        provenance: Provenance::of(cfg),
        timing: Vec::new(),
    })
}

/// MAP mean rate and placement cost versus grid resolution.
pub fn sweep_grid(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let resolutions = &cfg.experiment.grid_resolutions;
    let variants: Vec<ExperimentConfig> = resolutions
        .iter()
        .map(|&r| {
            let mut c = cfg.clone();
            c.track = TrackConfig {
                layout: TrackLayout::Grid,
                resolution: r,
                anchoring: cfg.experiment.grid_anchoring,
                include_center: false,
            };
            c
        })
        .collect();
    let link = cfg.channel.link_budget();
    // [instance][resolution] -> (rates, evaluations, elapsed)
    let results = instance_indices(cfg)
        .map(|(_, seed)| {
            variants
                .iter()
                .map(|c| {
                    let real = generate_realization(c, seed)?;
                    let placed = place_map_per_slot(&real.track, &real, &link)?;
                    let evals = placed.iter().map(|p| p.evaluations).sum::<usize>();
                    let elapsed = placed.iter().map(|p| p.elapsed).sum::<Duration>();
                    Ok((
                        placed.into_iter().map(|p| p.objective).collect::<Vec<_>>(),
                        evals,
                        elapsed,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(resolutions.len());
    let mut timing = Vec::with_capacity(resolutions.len());
    for (vi, &r) in resolutions.iter().enumerate() {
        let rows = results.iter().map(|inst| inst[vi].0.clone()).collect();
        points.push(SweepPoint::new(SystemModel::MapAided, r as f64, 0, rows));
        timing.push(GridTiming {
            resolution: r,
            candidates: r * r,
            evaluations: results.iter().map(|inst| inst[vi].1).sum(),
            elapsed: results.iter().map(|inst| inst[vi].2).sum(),
        });
    }
    Ok(SweepResult {
        experiment: Experiment::Grid,
        points,
        provenance: Provenance::of(cfg),
        timing,
    })
}

pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<SweepResult> {
    match experiment {
        Experiment::Power => sweep_power(cfg),
        Experiment::Blockers => sweep_blockers(cfg),
        Experiment::Mobility => sweep_mobility(cfg),
        Experiment::Grid => sweep_grid(cfg),
    }
}
