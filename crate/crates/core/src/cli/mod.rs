//! Command-line front end: argument parsing, config layering and output writing.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use config::{Experiment, ExperimentConfig};
use manifest::{OutputFile, RunManifest};

/// Exit code for invalid configuration or parameters.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical or I/O failures.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Units {
    /// Angular frequencies in rad·μs⁻¹.
    #[default]
    Rad,
    /// `J` and `Δ` in MHz; multiplied by 2π on load.
    Mhz,
}

#[derive(Debug, Parser)]
#[command(name = "liouvlab", version, about = "Liouvillian exceptional points of a driven dissipative qubit or qutrit")]
pub struct Cli {
    #[arg(value_enum)]
    pub experiment: Experiment,

    /// JSON run configuration.
    #[arg(short, long)]
    pub config: Option<PathBuf>,

    /// Directory for results (default: output/<experiment>).
    #[arg(short, long, env = "LIOUVLAB_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, env = "LIOUVLAB_THREADS")]
    pub threads: Option<usize>,

    #[arg(long, value_enum, default_value_t = Units::Rad)]
    pub units: Units,

    /// Master seed for trajectory ensembles.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of trajectories.
    #[arg(long)]
    pub trajectories: Option<usize>,

    /// Integrator and trajectory time step, μs.
    #[arg(long)]
    pub dt: Option<f64>,

    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl Cli {
    /// Layers experiment defaults, the config file and flags, in that order.
    pub fn resolve_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(e) = cfg.experiment {
            if e != self.experiment {
                return Err(Error::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    e.name(),
                    self.experiment.name()
                )));
            }
        }
        cfg.experiment = Some(self.experiment);
        if self.units == Units::Mhz {
            cfg.scale_angular(2.0 * std::f64::consts::PI);
        }
        if let Some(s) = self.seed {
            cfg.ensemble.master_seed = s;
        }
        if let Some(n) = self.trajectories {
            cfg.ensemble.n = n;
        }
        if let Some(dt) = self.dt {
            cfg.integrator.dt = dt;
            cfg.trajectory.dt = dt;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = Some(dir.clone());
        }
        cfg.integrator.validate()?;

        // Pin the system block so the manifest echo reruns without defaults.
        let defaults = config::Defaults::for_experiment(self.experiment, cfg.system.dim);
        let system = config::resolve_system(&cfg.system, &defaults)?;
        let s = &mut cfg.system;
        s.dim = Some(system.dim);
        s.j = Some(system.drive.j);
        s.delta = Some(system.drive.delta);
        s.gamma_e = Some(system.rates.gamma_e);
        s.gamma_phi = Some(system.rates.gamma_phi);
        s.gamma_f = Some(system.rates.gamma_f);
        s.gamma_f_extra = Some(system.rates.gamma_f_extra);
        Ok(cfg)
    }
}

/// Runs one experiment and returns the output directory.
pub fn run(cli: &Cli, command: Vec<String>) -> Result<PathBuf> {
    let cfg = cli.resolve_config()?;
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("output").join(cli.experiment.name()));
    let pool = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(|e| Error::Config(e.to_string()))?;

    let start = Instant::now();
    log::info!("running {} into {}", cli.experiment.name(), dir.display());
    let outputs = pool.install(|| commands::execute(cli.experiment, &cfg))?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::with_capacity(outputs.files.len());
    for (name, bytes) in &outputs.files {
        std::fs::write(dir.join(name), bytes)?;
        log::debug!("wrote {name} ({} bytes)", bytes.len());
        files.push(OutputFile::of(name, bytes));
    }
    RunManifest {
        experiment: cli.experiment.name().to_string(),
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        wall_clock_seconds: wall,
        threads: pool.current_num_threads(),
        config: cfg,
        outputs: files,
    }
    .write(&dir)?;
    Ok(dir)
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}
