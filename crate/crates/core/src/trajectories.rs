//! Monte-Carlo wavefunction unraveling of the master equation.
//!
//! Each step of length `dt` either applies one jump, chosen with
//! probability `dt·⟨ψ|L_k†L_k|ψ⟩`, or propagates with
//! `exp(−i H_eff dt)` where `H_eff = H − (i/2) Σ L_k†L_k`, then renormalizes.
//! Operators are frozen at each step midpoint, matching the master-equation
//! integrator's time grid.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{schedule_steps, EvolutionResult, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{ParameterSchedule, QuantumSystem};
use crate::numerics::{expm, ComplexMatrix};
use crate::output::{format_f64, CsvTable};

/// Largest jump probability per step before a warning is logged.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_store_every")]
    pub store_every: usize,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_store_every() -> usize {
    20
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            store_every: default_store_every(),
        }
    }
}

impl TrajectoryConfig {
    /// Integrator settings that reproduce this configuration's time grid.
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::default().with_dt(self.dt).with_store_every(self.store_every)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub channel: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    /// Unit-norm state at each stored time.
    pub states: Vec<Vec<Complex64>>,
    pub jumps: Vec<Jump>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub n_trajectories: usize,
    pub times: Vec<f64>,
    pub mean_density: Vec<ComplexMatrix>,
    /// Jump counts per channel label.
    pub jump_histogram: BTreeMap<&'static str, usize>,
    /// Jumps of every trajectory, indexed by trajectory number.
    pub jump_records: Vec<Vec<Jump>>,
    pub dim: crate::model::Dimension,
}

impl EnsembleResult {
    pub fn evolution(&self) -> EvolutionResult {
        EvolutionResult::from_states(self.dim, self.times.clone(), self.mean_density.clone())
    }

    /// Columns `trajectory_id, jump_time, channel`.
    pub fn jumps_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(["trajectory_id", "jump_time", "channel"]);
        for (id, jumps) in self.jump_records.iter().enumerate() {
            for j in jumps {
                table.push_fields(vec![id.to_string(), format_f64(j.time), j.channel.to_string()]);
            }
        }
        table
    }

    pub fn total_jumps(&self) -> usize {
        self.jump_histogram.values().sum()
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index`: element `index + 1` of the SplitMix64 stream
/// started at `master_seed`, i.e. `mix(master + (index+1)·0x9E3779B97F4A7C15)`.
pub fn split_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Operators frozen over one step.
struct StepOperators {
    propagator: ComplexMatrix,
    /// `(label, L, L†L)` per channel.
    channels: Vec<(&'static str, ComplexMatrix, ComplexMatrix)>,
}

/// Per-step operators for a whole run, shared by every trajectory.
pub struct TrajectoryPlan {
    d: usize,
    dim: crate::model::Dimension,
    h: f64,
    n_steps: usize,
    duration: f64,
    store_every: usize,
    steps: Vec<StepOperators>,
    /// Whether all steps share `steps[0]`.
    constant: bool,
}

impl TrajectoryPlan {
    pub fn new(system: &QuantumSystem, schedule: &ParameterSchedule, cfg: &TrajectoryConfig) -> Result<Self> {
        cfg.integrator().validate()?;
        schedule.validate()?;
        let n_steps = schedule_steps(schedule, &cfg.integrator());
        let h = schedule.duration / n_steps as f64;
        let constant = matches!(schedule.path, crate::model::DrivePath::Constant { .. })
            && schedule.gamma_profile == crate::model::GammaProfile::Constant;
        let build = |t: f64| -> Result<StepOperators> {
            let (drive, rates) = schedule.eval(t)?;
            let sys = QuantumSystem::with_options(system.dim, drive, rates, system.options)?;
            step_operators(&sys, h)
        };
        let steps = if constant {
            vec![build(0.5 * h)?]
        } else {
            (0..n_steps)
                .into_par_iter()
                .map(|k| build((k as f64 + 0.5) * h))
                .collect::<Result<_>>()?
        };
        let worst = steps
            .iter()
            .map(|s| {
                s.channels
                    .iter()
                    .map(|(_, _, ldl)| ldl.max_abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            * h;
        if worst > MAX_JUMP_PROBABILITY {
            log::warn!("jump probability per step may reach {worst:.3}; reduce dt");
        }
        Ok(Self {
            d: system.d(),
            dim: system.dim,
            h,
            n_steps,
            duration: schedule.duration,
            store_every: cfg.store_every,
            steps,
            constant,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Stored times: 0, every `store_every` steps, and the end point.
    pub fn stored_times(&self) -> Vec<f64> {
        let mut t = vec![0.0];
        for k in 0..self.n_steps {
            if (k + 1) % self.store_every == 0 || k + 1 == self.n_steps {
                t.push(if k + 1 == self.n_steps { self.duration } else { (k + 1) as f64 * self.h });
            }
        }
        t
    }

    fn step(&self, k: usize) -> &StepOperators {
        if self.constant {
            &self.steps[0]
        } else {
            &self.steps[k]
        }
    }

    pub fn run(&self, psi0: &[Complex64], seed: u64) -> Result<TrajectoryRecord> {
        check_state(psi0, self.d)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = psi0.to_vec();
        let mut record = TrajectoryRecord {
            seed,
            times: vec![0.0],
            states: vec![psi.clone()],
            jumps: Vec::new(),
        };
        let mut probs = Vec::new();
        for k in 0..self.n_steps {
            let ops = self.step(k);
            probs.clear();
            probs.extend(ops.channels.iter().map(|(_, _, ldl)| self.h * expectation(ldl, &psi)));
            let total: f64 = probs.iter().sum();
            let r: f64 = rng.random();
            let t_end = if k + 1 == self.n_steps { self.duration } else { (k + 1) as f64 * self.h };
            if r < total {
                let mut acc = 0.0;
                let mut chosen = probs.len() - 1;
                for (c, p) in probs.iter().enumerate() {
                    acc += p;
                    if r < acc {
                        chosen = c;
                        break;
                    }
                }
                let (label, l, _) = &ops.channels[chosen];
                psi = normalized(l.matvec(&psi)).ok_or_else(|| Error::ZeroNorm {
                    channel: label.to_string(),
                })?;
                record.jumps.push(Jump {
                    time: t_end,
                    channel: label,
                });
            } else {
                psi = normalized(ops.propagator.matvec(&psi)).ok_or_else(|| Error::ZeroNorm {
                    channel: "no-jump".into(),
                })?;
            }
            if (k + 1) % self.store_every == 0 || k + 1 == self.n_steps {
                record.times.push(t_end);
                record.states.push(psi.clone());
            }
        }
        Ok(record)
    }
}

fn step_operators(system: &QuantumSystem, h: f64) -> Result<StepOperators> {
    let d = system.d();
    let mut heff = system.hamiltonian();
    let mut channels = Vec::new();
    for op in system.jump_operators() {
        let ldl = &op.matrix.adjoint() * &op.matrix;
        heff += &ldl.scale(Complex64::new(0.0, -0.5));
        channels.push((op.label, op.matrix.clone(), ldl));
    }
    debug_assert_eq!(heff.rows(), d);
    let propagator = expm(&heff.scale(Complex64::new(0.0, -h)))?;
    Ok(StepOperators { propagator, channels })
}

fn expectation(a: &ComplexMatrix, psi: &[Complex64]) -> f64 {
    a.matvec(psi).iter().zip(psi).map(|(x, p)| p.conj() * x).sum::<Complex64>().re
}

fn normalized(v: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (n > 1e-300 && n.is_finite()).then(|| v.into_iter().map(|z| z / n).collect())
}

fn check_state(psi: &[Complex64], d: usize) -> Result<()> {
    if psi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: (d, 1),
            found: (psi.len(), 1),
        });
    }
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter {
            name: "psi0",
            reason: format!("state must have unit norm, got |psi|^2 = {n}"),
        });
    }
    Ok(())
}

/// One trajectory along `schedule` (use [`ParameterSchedule::constant`] for a fixed drive).
pub fn run_trajectory(
    system: &QuantumSystem,
    schedule: &ParameterSchedule,
    psi0: &[Complex64],
    cfg: &TrajectoryConfig,
    seed: u64,
) -> Result<TrajectoryRecord> {
    TrajectoryPlan::new(system, schedule, cfg)?.run(psi0, seed)
}

/// `n` trajectories with seeds [`split_seed`]`(master_seed, i)`.
///
/// Trajectories run in parallel; densities are summed in trajectory order
/// so the result does not depend on the thread count.
pub fn run_ensemble(
    system: &QuantumSystem,
    schedule: &ParameterSchedule,
    psi0: &[Complex64],
    cfg: &TrajectoryConfig,
    n: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "ensemble needs at least one trajectory".into(),
        });
    }
    let plan = TrajectoryPlan::new(system, schedule, cfg)?;
    let times = plan.stored_times();
    let records: Vec<TrajectoryRecord> = (0..n)
        .into_par_iter()
        .map(|i| plan.run(psi0, split_seed(master_seed, i as u64)))
        .collect::<Result<_>>()?;

    let d = plan.d;
    let mut sums = vec![ComplexMatrix::zeros(d, d); times.len()];
    let mut histogram = BTreeMap::new();
    for op in system.jump_operators() {
        histogram.insert(op.label, 0);
    }
    let mut jump_records = Vec::with_capacity(n);
    for rec in records {
        for (sum, psi) in sums.iter_mut().zip(&rec.states) {
            for i in 0..d {
                for j in 0..d {
                    sum[(i, j)] += psi[i] * psi[j].conj();
                }
            }
        }
        for jump in &rec.jumps {
            *histogram.entry(jump.channel).or_insert(0) += 1;
        }
        jump_records.push(rec.jumps);
    }
    let inv = 1.0 / n as f64;
    Ok(EnsembleResult {
        n_trajectories: n,
        times,
        mean_density: sums.into_iter().map(|m| m.scale_real(inv)).collect(),
        jump_histogram: histogram,
        jump_records,
        dim: plan.dim,
    })
}
