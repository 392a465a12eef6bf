//! Strict JSON run configuration and per-experiment defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::FitWindow;
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::liouvillian::ScanAxis;
use crate::model::{
    basis_state, minus_x, plus_x, qutrit_gf_superposition, Dimension, Direction, DriveParams, DrivePath,
    ParameterSchedule, QuantumSystem, QutritOptions, Rates,
};
use crate::trajectories::TrajectoryConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    EpMap,
    Fig1,
    Fig2,
    Fig4,
    Sweeps,
    SteadyState,
    Trajectories,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::EpMap => "ep-map",
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig4 => "fig4",
            Self::Sweeps => "sweeps",
            Self::SteadyState => "steady-state",
            Self::Trajectories => "trajectories",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    PlusX,
    MinusX,
    Ground,
    Excited,
    /// `(|g⟩ − |f⟩)/√2`, qutrit only.
    GfSuperposition,
}

impl InitialState {
    pub fn ket(self, d: usize) -> Result<Vec<Complex64>> {
        match (self, d) {
            (Self::PlusX, 2) => Ok(plus_x()),
            (Self::MinusX, 2) => Ok(minus_x()),
            (Self::PlusX | Self::MinusX, _) => {
                let mut v = if self == Self::PlusX { plus_x() } else { minus_x() };
                v.resize(d, Complex64::new(0.0, 0.0));
                Ok(v)
            }
            (Self::Ground, _) => Ok(basis_state(d, 0)),
            (Self::Excited, _) => Ok(basis_state(d, 1)),
            (Self::GfSuperposition, 3) => Ok(qutrit_gf_superposition()),
            (Self::GfSuperposition, _) => Err(Error::Config("gf_superposition needs a qutrit".into())),
        }
    }
}

/// System block; unset fields take the experiment's defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dim: Option<Dimension>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "Delta")]
    pub delta: Option<f64>,
    pub gamma_e: Option<f64>,
    pub gamma_phi: Option<f64>,
    pub gamma_f: Option<f64>,
    pub gamma_f_extra: Option<f64>,
    #[serde(default)]
    pub options: QutritOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_n() -> usize {
    1000
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(rename = "J")]
    pub j: Option<ScanAxis>,
    #[serde(rename = "Delta")]
    pub delta: Option<ScanAxis>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Loop durations for the duration sweep, μs.
    #[serde(rename = "T")]
    pub t: Option<Vec<f64>>,
    /// Detuning amplitudes for the detuning sweep, rad·μs⁻¹.
    #[serde(rename = "Delta_max")]
    pub delta_max: Option<Vec<f64>>,
    /// `Δ_max` held fixed during the duration sweep.
    #[serde(rename = "Delta_max_fixed")]
    pub delta_max_fixed: Option<f64>,
    /// `T` held fixed during the detuning sweep.
    #[serde(rename = "T_fixed")]
    pub t_fixed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional cross-check against the subcommand.
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub system: SystemConfig,
    pub schedule: Option<ParameterSchedule>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub fit_window: FitWindow,
    pub initial_state: Option<InitialState>,
    pub output_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.as_ref().is_none_or(|v| v.contains(&f))
    }

    /// Multiplies every angular quantity (`J`, `Δ`, their ranges and loop
    /// amplitudes) by `factor`; rates are left alone.
    pub fn scale_angular(&mut self, factor: f64) {
        let s = &mut self.system;
        for v in [&mut s.j, &mut s.delta].into_iter().flatten() {
            *v *= factor;
        }
        for axis in [&mut self.scan.j, &mut self.scan.delta].into_iter().flatten() {
            axis.min *= factor;
            axis.max *= factor;
        }
        if let Some(sched) = &mut self.schedule {
            match &mut sched.path {
                DrivePath::Encircling { j_max, delta_max } => {
                    *j_max *= factor;
                    *delta_max *= factor;
                }
                DrivePath::Constant { j, delta } => {
                    *j *= factor;
                    *delta *= factor;
                }
            }
        }
        if let Some(v) = &mut self.sweep.delta_max {
            v.iter_mut().for_each(|x| *x *= factor);
        }
        if let Some(x) = &mut self.sweep.delta_max_fixed {
            *x *= factor;
        }
    }
}

/// Experiment defaults filled in before the config is used.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub dim: Dimension,
    pub rates: Rates,
    pub j: f64,
    pub delta: f64,
}

impl Defaults {
    pub fn for_experiment(e: Experiment, dim: Option<Dimension>) -> Self {
        let qubit = |ge, gp| Rates {
            gamma_e: ge,
            gamma_phi: gp,
            gamma_f: 0.0,
            gamma_f_extra: 0.0,
        };
        let fig4 = Rates {
            gamma_e: 4.2,
            gamma_phi: 0.2,
            gamma_f: 0.3,
            gamma_f_extra: 0.75,
        };
        let (dim_default, rates) = match e {
            Experiment::Spectrum => match dim {
                Some(Dimension::Qutrit) => (Dimension::Qutrit, qubit(4.5, 0.0)),
                _ => (Dimension::Qubit, qubit(4.4, 0.1)),
            },
            Experiment::EpMap => (Dimension::Qubit, qubit(4.5, 0.0)),
            Experiment::Fig1 | Experiment::SteadyState => (Dimension::Qubit, qubit(4.4, 0.1)),
            Experiment::Fig2 | Experiment::Sweeps | Experiment::Trajectories => (Dimension::Qubit, qubit(4.6, 0.2)),
            Experiment::Fig4 => (Dimension::Qutrit, fig4),
        };
        Self {
            dim: dim.unwrap_or(dim_default),
            rates,
            j: if e == Experiment::SteadyState { 1.0 } else { 0.0 },
            delta: 0.0,
        }
    }
}

/// The fully resolved system of a run.
pub fn resolve_system(cfg: &SystemConfig, d: &Defaults) -> Result<QuantumSystem> {
    let rates = Rates {
        gamma_e: cfg.gamma_e.unwrap_or(d.rates.gamma_e),
        gamma_phi: cfg.gamma_phi.unwrap_or(d.rates.gamma_phi),
        gamma_f: cfg.gamma_f.unwrap_or(d.rates.gamma_f),
        gamma_f_extra: cfg.gamma_f_extra.unwrap_or(d.rates.gamma_f_extra),
    };
    let drive = DriveParams::new(cfg.j.unwrap_or(d.j), cfg.delta.unwrap_or(d.delta))?;
    QuantumSystem::with_options(cfg.dim.unwrap_or(d.dim), drive, rates, cfg.options)
}

/// The configured loop, or the standard `T = 2 μs` encircling at the system's rates.
pub fn resolve_schedule(cfg: &ExperimentConfig, system: &QuantumSystem) -> Result<ParameterSchedule> {
    match cfg.schedule {
        Some(s) => {
            s.validate()?;
            Ok(s)
        }
        None => ParameterSchedule::encircling(2.0, Direction::Ccw, system.rates),
    }
}

/// Default `Δ_max` of the duration sweep: `2π × 5 MHz`.
pub const DURATION_SWEEP_DELTA_MAX: f64 = 2.0 * PI * 5.0;
/// Default `T` of the detuning sweep.
pub const DETUNING_SWEEP_DURATION: f64 = 2.0;
