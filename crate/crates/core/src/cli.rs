//! Command-line front end: `validate`, `run` and `trace`.
//!
//! The binary is a thin wrapper around [`main_with_args`], which writes to the
//! supplied streams and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::{build_wall_arrays, lambertian_order, los_gain, RisArray, Wall};
use crate::config::{content_hash, ConfigError, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::{segment_hits_cylinder, Pose, Vec3};
use crate::montecarlo::{run_experiment, slot_channels, Experiment, SystemModel};
use crate::optimize::{map_rate, place_map_exhaustive};
use crate::scenario::generate_realization;
use crate::seeding::instance_seed;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "MAPVLC_WORKERS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    /// Command-line usage errors (reported by clap).
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const IO: i32 = 5;
    pub const ARGUMENT: i32 = 6;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(ConfigError::Read { .. }) => exit::IO,
        Error::Config(ConfigError::Parse { .. }) => exit::PARSE,
        Error::Config(ConfigError::Invalid(_)) => exit::VALIDATION,
        Error::Io { .. } | Error::Csv(_) => exit::IO,
        Error::OutOfRange { .. } => exit::ARGUMENT,
        _ => exit::RUNTIME,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mapvlc",
    version,
    about = "Indoor VLC simulator: movable APs vs. fixed AP vs. mirror-array RIS"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Power,
    Blockers,
    Mobility,
    Grid,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Power => Experiment::Power,
            ExperimentArg::Blockers => Experiment::Blockers,
            ExperimentArg::Mobility => Experiment::Mobility,
            ExperimentArg::Grid => Experiment::Grid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    MapAided,
    RisAided,
    FixedAp,
    RisOnly,
}

impl From<ModelArg> for SystemModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::MapAided => SystemModel::MapAided,
            ModelArg::RisAided => SystemModel::RisAided,
            ModelArg::FixedAp => SystemModel::FixedAp,
            ModelArg::RisOnly => SystemModel::RisOnly,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every config invariant and print derived link parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one experiment campaign and write CSVs plus a run manifest.
    Run {
        #[arg(value_enum)]
        experiment: ExperimentArg,
        /// Config file; defaults reproduce the reference case study.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `experiment.master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides `experiment.instances`.
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Dump every channel and optimizer decision for one slot.
    Trace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        instance: usize,
        #[arg(long, default_value_t = 0)]
        slot: usize,
        #[arg(long, value_enum, default_value = "map-aided")]
        model: ModelArg,
    },
}

/// Record of one `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_path: Option<PathBuf>,
    /// SHA-256 of the config file bytes (of `""` when no file was given).
    pub config_hash: String,
    /// SHA-256 of the effective config after command-line overrides.
    pub effective_config_hash: String,
    pub master_seed: u64,
    pub instances: usize,
    pub code_version: String,
    pub timestamp_unix_s: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "run_manifest.json";

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Re-hashes the referenced config file and compares with the stored hash.
    pub fn config_hash_matches(&self) -> Result<bool> {
        let bytes = match &self.config_path {
            Some(p) => fs::read(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?,
            None => Vec::new(),
        };
        Ok(content_hash(&bytes) == self.config_hash)
    }
}

fn load_config(path: Option<&Path>) -> Result<(ExperimentConfig, String)> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok((ExperimentConfig::default(), content_hash(b""))),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Builds a pool sized from [`WORKERS_ENV`], falling back to rayon's default.
pub fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

pub fn cmd_validate(config: &Path, out: &mut dyn Write) -> Result<()> {
    let (cfg, hash) = ExperimentConfig::load(config)?;
    let d = cfg.channel.detector();
    let mirrors: usize = build_wall_arrays(&cfg.room, &cfg.ris)
        .iter()
        .map(|a| a.mirrors.len())
        .sum();
    let w = |e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    writeln!(out, "config {} is valid (sha256 {hash})", config.display()).map_err(w)?;
    writeln!(
        out,
        "lambertian_order m = {}",
        lambertian_order(cfg.channel.semi_angle_deg)
    )
    .map_err(w)?;
    writeln!(out, "concentrator_gain g = {:.4}", d.concentrator_gain()).map_err(w)?;
    writeln!(out, "noise_power sigma2 = {:e} A^2", cfg.channel.noise().noise_power()).map_err(w)?;
    writeln!(out, "mirrors = {mirrors}").map_err(w)?;
    Ok(())
}

pub struct RunOptions<'a> {
    pub experiment: Experiment,
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub out_dir: &'a Path,
    pub instances: Option<usize>,
    pub quiet: bool,
}

pub fn cmd_run(opts: &RunOptions<'_>, out: &mut dyn Write) -> Result<RunManifest> {
    let (mut cfg, config_hash) = load_config(opts.config)?;
    if let Some(s) = opts.seed {
        cfg.experiment.master_seed = s;
    }
    if let Some(n) = opts.instances {
        cfg.experiment.instances = n;
    }
    cfg.validate_strict()?;

    let result = worker_pool().install(|| run_experiment(opts.experiment, &cfg))?;

    let dir = opts.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = opts.experiment.name();
    let rates_path = dir.join(format!("{name}_rates.csv"));
    let summary_path = dir.join(format!("{name}_summary.csv"));
    let create = |p: &Path| fs::File::create(p).map_err(io_err(p));
    result.write_rates_csv(std::io::BufWriter::new(create(&rates_path)?))?;
    result.write_summary_csv(create(&summary_path)?)?;
    let mut outputs = vec![rates_path, summary_path];
    if !result.timing.is_empty() {
        let timing_path = dir.join(format!("{name}_timing.csv"));
        result.write_timing_csv(create(&timing_path)?)?;
        outputs.push(timing_path);
    }

    let manifest = RunManifest {
        experiment: name.to_string(),
        config_path: opts.config.map(Path::to_path_buf),
        config_hash,
        effective_config_hash: result.provenance.config_hash.clone(),
        master_seed: cfg.experiment.master_seed,
        instances: cfg.experiment.instances,
        code_version: result.provenance.code_version.clone(),
        timestamp_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs,
    };
    let manifest_path = dir.join(RunManifest::FILE_NAME);
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&manifest_path))?;

    if !opts.quiet {
        writeln!(
            out,
            "{name} sweep, mean rate [Mbps], {} instances",
            cfg.experiment.instances
        )
        .and_then(|_| write!(out, "{}", result.summary_table()))
        .map_err(io_err(Path::new("<stdout>")))?;
    }
    Ok(manifest)
}

/// One occlusion test between a link and an occluder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockageVerdict {
    pub link: String,
    pub occluder: String,
    pub blocked: bool,
}

/// Everything that went into one slot's rate for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotTrace {
    pub model: SystemModel,
    pub instance: usize,
    pub slot: usize,
    pub seed: u64,
    pub user_position: Vec3,
    pub device_position: Vec3,
    pub device_normal: Vec3,
    pub map_index: usize,
    pub map_point: Vec3,
    pub ap_position: Vec3,
    pub los_gain: f64,
    pub ris_gain_per_wall: Vec<(Wall, f64)>,
    pub ris_gain: f64,
    pub total_gain: f64,
    pub blockage: Vec<BlockageVerdict>,
    pub snr: f64,
    pub rate_bps: f64,
}

fn array_center(a: &RisArray) -> Vec3 {
    let n = a.mirrors.len() as f64;
    a.mirrors.iter().fold(Vec3::ZERO, |acc, m| acc + m.patch.center) * (1.0 / n)
}

pub fn trace_slot(cfg: &ExperimentConfig, instance: usize, slot: usize, model: SystemModel) -> Result<SlotTrace> {
    if instance >= cfg.experiment.instances {
        return Err(Error::OutOfRange {
            what: "instance",
            index: instance,
            len: cfg.experiment.instances,
        });
    }
    if slot >= cfg.scenario.slots {
        return Err(Error::OutOfRange {
            what: "slot",
            index: slot,
            len: cfg.scenario.slots,
        });
    }
    let seed = instance_seed(cfg.experiment.master_seed, instance);
    let real = generate_realization(cfg, seed)?;
    let link = cfg.channel.link_budget();
    let user = real.user_states[slot];
    let rx = link.receiver(user.device_pose());
    let occ = real.occluders(slot);

    let placement = place_map_exhaustive(&real.track, |p| map_rate(p, &rx, &occ, &link))?;
    let ap_position = match model {
        SystemModel::MapAided => placement.chosen_point,
        _ => real.room.ceiling_center(),
    };
    let led = link.led(Pose::downward(ap_position));
    let los = match model {
        SystemModel::RisOnly => 0.0,
        _ => los_gain(&led, &rx, &occ)?,
    };

    let arrays = if model.uses_ris() {
        build_wall_arrays(&real.room, &cfg.ris)
    } else {
        Vec::new()
    };
    let ris_report = if model.uses_ris() {
        slot_channels(cfg, &real, slot, &arrays, true)?.ris
    } else {
        None
    };
    let ris_gain_per_wall = ris_report.as_ref().map(|r| r.per_wall_gain.clone()).unwrap_or_default();
    let ris_gain = ris_report.as_ref().map_or(0.0, |r| r.total_gain);

    let occluder_name = |k: usize| {
        if k == 0 {
            "user_body".to_string()
        } else {
            format!("blocker_{}", k - 1)
        }
    };
    let mut blockage = Vec::new();
    let mut links: Vec<(String, Vec3)> = Vec::new();
    if model != SystemModel::RisOnly {
        links.push(("ap->device".to_string(), ap_position));
    }
    for a in &arrays {
        links.push((format!("ris_{}->device", a.wall.name()), array_center(a)));
    }
    for (name, from) in &links {
        for (k, c) in occ.iter().enumerate() {
            blockage.push(BlockageVerdict {
                link: name.clone(),
                occluder: occluder_name(k),
                blocked: segment_hits_cylinder(*from, user.device_position, c),
            });
        }
    }

    let total_gain = los + ris_gain;
    Ok(SlotTrace {
        model,
        instance,
        slot,
        seed,
        user_position: user.position(),
        device_position: user.device_position,
        device_normal: user.device_normal,
        map_index: placement.chosen_index,
        map_point: placement.chosen_point,
        ap_position,
        los_gain: los,
        ris_gain_per_wall,
        ris_gain,
        total_gain,
        blockage,
        snr: link.snr(total_gain),
        rate_bps: link.rate(total_gain),
    })
}

fn fmt_vec(v: Vec3) -> String {
    format!("({}, {}, {})", v.x, v.y, v.z)
}

/// Line-oriented `key: value` dump. Floats use the shortest exact form.
pub fn render_trace(t: &SlotTrace) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(": ");
        s.push_str(&v);
        s.push('\n');
    };
    line("model", t.model.name().to_string());
    line("instance", t.instance.to_string());
    line("slot", t.slot.to_string());
    line("seed", t.seed.to_string());
    line("user_position", fmt_vec(t.user_position));
    line("device_position", fmt_vec(t.device_position));
    line("device_normal", fmt_vec(t.device_normal));
    line("map_point", format!("{} [index {}]", fmt_vec(t.map_point), t.map_index));
    line("ap_position", fmt_vec(t.ap_position));
    line("los_gain", format!("{:e}", t.los_gain));
    for (w, g) in &t.ris_gain_per_wall {
        line(&format!("ris_gain[{}]", w.name()), format!("{g:e}"));
    }
    line("ris_gain", format!("{:e}", t.ris_gain));
    line("total_gain", format!("{:e}", t.total_gain));
    for b in &t.blockage {
        line(&format!("blocked[{}][{}]", b.link, b.occluder), b.blocked.to_string());
    }
    line("snr", format!("{:e}", t.snr));
    line("rate_bps", format!("{:e}", t.rate_bps));
    s
}

pub struct TraceOptions<'a> {
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub instance: usize,
    pub slot: usize,
    pub model: SystemModel,
}

pub fn cmd_trace(opts: &TraceOptions<'_>, out: &mut dyn Write) -> Result<SlotTrace> {
    let (mut cfg, _) = load_config(opts.config)?;
    if let Some(s) = opts.seed {
        cfg.experiment.master_seed = s;
    }
    let t = trace_slot(&cfg, opts.instance, opts.slot, opts.model)?;
    write!(out, "{}", render_trace(&t)).map_err(io_err(Path::new("<stdout>")))?;
    Ok(t)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to `err`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return exit::USAGE;
            }
            let _ = write!(out, "{e}");
            return exit::OK;
        }
    };
    let result = match cli.command {
        Command::Validate { config } => cmd_validate(&config, out),
        Command::Run {
            experiment,
            config,
            seed,
            out: out_dir,
            instances,
            quiet,
        } => cmd_run(
            &RunOptions {
                experiment: experiment.into(),
                config: config.as_deref(),
                seed,
                out_dir: &out_dir,
                instances,
                quiet,
            },
            out,
        )
        .map(|_| ()),
        Command::Trace {
            config,
            seed,
            instance,
            slot,
            model,
        } => cmd_trace(
            &TraceOptions {
                config: config.as_deref(),
                seed,
                instance,
                slot,
                model: model.into(),
            },
            out,
        )
        .map(|_| ()),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
