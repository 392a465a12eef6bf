//! One function per experiment; each returns its files in memory.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{
    resolve_schedule, resolve_system, Defaults, Experiment, ExperimentConfig, Format, InitialState,
    DETUNING_SWEEP_DURATION, DURATION_SWEEP_DELTA_MAX,
};
use crate::analysis::{
    chirality, entropy, fit_damped_sine, scan_transition, sweep_metrics, SweepResult, SweepVariable, TransitionObservable,
    TransitionScan,
};
use crate::dynamics::{bloch_vector, integrate_constant, integrate_scheduled, EvolutionResult};
use crate::error::{Error, Result};
use crate::liouvillian::{
    build_superoperator, ep_scan, qubit_ep_coupling, qutrit_coherence_ep_coupling, spectrum, steady_state,
    track_branches, ScanAxis, ScanGrid,
};
use crate::model::{projector, Dimension, Direction, DriveParams, DrivePath, GammaProfile, ParameterSchedule, QuantumSystem, Rates};
use crate::numerics::{trace_distance, ComplexMatrix};
use crate::output::{format_f64, CsvTable};
use crate::trajectories::{run_ensemble, run_trajectory, EnsembleResult};

/// Fitted frequencies above this count as oscillating.
pub const OSCILLATION_THRESHOLD: f64 = 0.1;

/// Files produced by a command, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn csv(&mut self, cfg: &ExperimentConfig, name: &str, table: &CsvTable) {
        if cfg.wants(Format::Csv) {
            self.files.push((format!("{name}.csv"), table.render().into_bytes()));
        }
    }

    fn json(&mut self, cfg: &ExperimentConfig, name: &str, value: &impl Serialize) -> Result<()> {
        if cfg.wants(Format::Json) {
            let mut v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
            pin_floats(&mut v);
            let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
            text.push('\n');
            self.files.push((format!("{name}.json"), text.into_bytes()));
        }
        Ok(())
    }
}

/// Rounds every float in a JSON tree to the CSV precision so summaries are
/// as reproducible as the tables.
fn pin_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                let pinned: f64 = format_f64(x).parse().unwrap_or(x);
                if let Some(num) = serde_json::Number::from_f64(pinned) {
                    *n = num;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(pin_floats),
        Value::Object(o) => o.values_mut().for_each(pin_floats),
        _ => {}
    }
}

pub fn execute(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outputs> {
    let defaults = Defaults::for_experiment(experiment, cfg.system.dim);
    let system = resolve_system(&cfg.system, &defaults)?;
    let mut out = Outputs::default();
    match experiment {
        Experiment::Spectrum => cmd_spectrum(cfg, &system, &mut out)?,
        Experiment::EpMap => cmd_ep_map(cfg, &system, &mut out)?,
        Experiment::Fig1 => cmd_fig1(cfg, &system, &mut out)?,
        Experiment::Fig2 => cmd_fig2(cfg, &system, &mut out)?,
        Experiment::Fig4 => cmd_fig4(cfg, &system, &mut out)?,
        Experiment::Sweeps => cmd_sweeps(cfg, &system, &mut out)?,
        Experiment::SteadyState => cmd_steady_state(cfg, &system, &mut out)?,
        Experiment::Trajectories => cmd_trajectories(cfg, &system, &mut out)?,
    }
    Ok(out)
}

fn j_axis(cfg: &ExperimentConfig, default: (f64, f64, usize)) -> Result<ScanAxis> {
    let axis = match cfg.scan.j {
        Some(a) => a,
        None => ScanAxis::new(default.0, default.1, default.2)?,
    };
    axis.validate("J range")?;
    Ok(axis)
}

/// Analytic LEP couplings on the `Δ = 0` line.
fn analytic_eps(system: &QuantumSystem) -> Vec<Value> {
    let mut v = Vec::new();
    if let Some(j) = qubit_ep_coupling(&system.rates) {
        v.push(json!({"J": j, "type": "population"}));
    }
    if system.dim == Dimension::Qutrit {
        v.push(json!({"J": qutrit_coherence_ep_coupling(&system.rates), "type": "coherence"}));
    }
    v
}

fn cmd_spectrum(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    let axis = j_axis(cfg, (0.0, 1.5, 301))?;
    let delta = system.drive.delta;
    let results = axis
        .values()
        .par_iter()
        .map(|&j| spectrum(&build_superoperator(&system.with_drive(DriveParams::new(j, delta)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let eigen: Vec<Vec<Complex64>> = results.iter().map(|r| r.eigenvalues.clone()).collect();
    let branches = track_branches(&eigen);
    let n = branches.len();
    let header = ["J".to_string()]
        .into_iter()
        .chain((0..n).map(|k| format!("re_lambda_{k}")))
        .chain((0..n).map(|k| format!("im_lambda_{k}")))
        .chain(["gap", "angle", "ep_order"].map(String::from));
    let mut table = CsvTable::new(header);
    for (i, (j, r)) in axis.values().into_iter().zip(&results).enumerate() {
        let mut row = vec![j];
        row.extend(branches.iter().map(|b| b[i].re));
        row.extend(branches.iter().map(|b| b[i].im));
        row.extend([r.min_eigenvalue_gap, r.min_eigenvector_angle, r.ep_order as f64]);
        table.push_numbers(&row);
    }
    out.csv(cfg, "spectrum", &table);

    let map = ep_scan(system, &ScanGrid::row(axis, delta)?)?;
    let found: Vec<Value> = map
        .ep_points()
        .map(|p| json!({"J": p.j, "re_lambda": p.re_lambda, "im_lambda": p.im_lambda, "kind": p.kind}))
        .collect();
    out.json(
        cfg,
        "spectrum_summary",
        &json!({
            "dim": system.dim,
            "rates": system.rates,
            "Delta": delta,
            "ep_points": found,
            "analytic_ep": analytic_eps(system),
        }),
    )
}

fn cmd_ep_map(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    let j = j_axis(cfg, (0.0, 1.2, 121))?;
    let delta = match cfg.scan.delta {
        Some(a) => a,
        None => ScanAxis::new(-1.0, 1.0, 101)?,
    };
    let map = ep_scan(system, &ScanGrid::new(j, delta)?)?;
    out.csv(cfg, "ep_map", &map.to_csv());
    out.json(
        cfg,
        "ep_overlay",
        &json!({
            "rates": system.rates,
            "scan": map.scan,
            "lines": map.ep_lines,
            "third_order_points": map.ep3_points,
        }),
    )
}

/// `J, t, value` rows for a family of runs.
fn long_table(columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CsvTable {
    let mut t = CsvTable::new(columns.iter().copied());
    for r in rows {
        t.push_numbers(&r);
    }
    t
}

fn transition_summary(scan: &TransitionScan) -> Value {
    json!({
        "ep_coupling": scan.ep_coupling,
        "transition_J": scan.transition(OSCILLATION_THRESHOLD),
        "threshold": OSCILLATION_THRESHOLD,
        "failures": scan.failures,
    })
}

fn cmd_fig1(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    let axis = j_axis(cfg, (0.1, 1.8, 35))?;
    let times = cfg.fit_window.times();
    let rho0 = projector(&InitialState::Excited.ket(system.d())?);
    let run = |j: f64| -> Result<EvolutionResult> {
        integrate_constant(&system.with_drive(DriveParams::new(j, system.drive.delta)?)?, &rho0, &times, &cfg.integrator)
    };
    let runs = axis.values().par_iter().map(|&j| run(j)).collect::<Result<Vec<_>>>()?;
    let rows = axis.values().into_iter().zip(&runs).flat_map(|(j, r)| {
        r.times
            .iter()
            .zip(r.population(1))
            .map(move |(&t, p)| vec![j, t, p])
            .collect::<Vec<_>>()
    });
    out.csv(cfg, "fig1_heatmap", &long_table(&["J", "t", "rho_ee"], rows));

    let mut cuts = CsvTable::new(["t", "rho_ee_J0.1", "fit_J0.1", "rho_ee_J1.8", "fit_J1.8"]);
    let (lo, hi) = (run(0.1)?, run(1.8)?);
    let (plo, phi) = (lo.population(1), hi.population(1));
    let (flo, fhi) = (fit_damped_sine(&times, &plo)?, fit_damped_sine(&times, &phi)?);
    for (k, &t) in times.iter().enumerate() {
        cuts.push_numbers(&[t, plo[k], flo.eval(t), phi[k], fhi.eval(t)]);
    }
    out.csv(cfg, "fig1_cuts", &cuts);

    let scan = scan_transition(system, &axis.values(), TransitionObservable::ExcitedPopulation, &cfg.fit_window)?;
    out.csv(cfg, "fig1_transition", &scan.to_csv());
    out.json(cfg, "fig1_summary", &json!({"rates": system.rates, "transition": transition_summary(&scan)}))
}

fn bloch_table(r: &EvolutionResult) -> CsvTable {
    long_table(
        &["t", "x", "y", "z"],
        r.times.iter().zip(&r.states).map(|(&t, rho)| {
            let [x, y, z] = bloch_vector(rho);
            vec![t, x, y, z]
        }),
    )
}

/// Mean state, jump record and per-time distance to the master equation.
fn ensemble_outputs(
    cfg: &ExperimentConfig,
    prefix: &str,
    system: &QuantumSystem,
    schedule: &ParameterSchedule,
    psi0: &[Complex64],
    out: &mut Outputs,
) -> Result<(EnsembleResult, f64)> {
    let ens = run_ensemble(system, schedule, psi0, &cfg.trajectory, cfg.ensemble.n, cfg.ensemble.master_seed)?;
    let lind = integrate_scheduled(system, schedule, &projector(psi0), &cfg.trajectory.integrator())?;
    let errors = ens
        .mean_density
        .iter()
        .zip(&lind.states)
        .map(|(a, b)| trace_distance(a, b))
        .collect::<Result<Vec<_>>>()?;
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    out.csv(cfg, &format!("{prefix}_ensemble_mean"), &ens.evolution().to_csv());
    out.csv(cfg, &format!("{prefix}_ensemble_jumps"), &ens.jumps_csv());
    out.csv(
        cfg,
        &format!("{prefix}_ensemble_error"),
        &long_table(&["t", "trace_distance"], ens.times.iter().zip(&errors).map(|(&t, &e)| vec![t, e])),
    );
    Ok((ens, max_error))
}

fn cmd_fig2(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    if system.dim != Dimension::Qubit {
        return Err(Error::Config("fig2 runs on a qubit".into()));
    }
    let schedule = resolve_schedule(cfg, system)?;
    let mut finals = BTreeMap::new();
    let mut chiral = BTreeMap::new();
    for (label, state) in [("plus_x", InitialState::PlusX), ("minus_x", InitialState::MinusX)] {
        let rho0 = projector(&state.ket(2)?);
        let mut ends = Vec::new();
        for dir in [Direction::Cw, Direction::Ccw] {
            let r = integrate_scheduled(system, &schedule.with_direction(dir), &rho0, &cfg.integrator)?;
            out.csv(cfg, &format!("fig2_{label}_{}", dir.as_str()), &bloch_table(&r));
            finals.insert(format!("{label}_{}", dir.as_str()), r.final_bloch());
            ends.push(r.final_state().clone());
        }
        chiral.insert(label, chirality(&ends[0], &ends[1])?);
    }

    let psi0 = cfg.initial_state.unwrap_or(InitialState::PlusX).ket(2)?;
    let rec = run_trajectory(system, &schedule, &psi0, &cfg.trajectory, cfg.ensemble.master_seed)?;
    let single = long_table(
        &["t", "x", "y", "z"],
        rec.times.iter().zip(&rec.states).map(|(&t, psi)| {
            let [x, y, z] = bloch_vector(&projector(psi));
            vec![t, x, y, z]
        }),
    );
    out.csv(cfg, "fig2_single_trajectory", &single);
    let mut jumps = CsvTable::new(["jump_time", "channel"]);
    for j in &rec.jumps {
        jumps.push_fields(vec![format_f64(j.time), j.channel.to_string()]);
    }
    out.csv(cfg, "fig2_single_trajectory_jumps", &jumps);

    let (ens, max_error) = ensemble_outputs(cfg, "fig2", system, &schedule, &psi0, out)?;
    out.json(
        cfg,
        "fig2_summary",
        &json!({
            "schedule": schedule,
            "final_bloch": finals,
            "chirality": chiral,
            "ensemble": {
                "n": ens.n_trajectories,
                "master_seed": cfg.ensemble.master_seed,
                "max_trace_distance": max_error,
                "jump_histogram": ens.jump_histogram,
            },
        }),
    )
}

fn cmd_fig4(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    if system.dim != Dimension::Qutrit {
        return Err(Error::Config("fig4 runs on a qutrit".into()));
    }
    let axis = j_axis(cfg, (0.4, 1.8, 29))?;
    let times = cfg.fit_window.times();
    let rho0 = projector(&cfg.initial_state.unwrap_or(InitialState::GfSuperposition).ket(3)?);
    let extra = system.uniform_loss_rate();
    let runs = axis
        .values()
        .par_iter()
        .map(|&j| integrate_constant(&system.with_drive(DriveParams::new(j, system.drive.delta)?)?, &rho0, &times, &cfg.integrator))
        .collect::<Result<Vec<_>>>()?;
    let rows = axis.values().into_iter().zip(&runs).flat_map(|(j, r)| {
        r.times
            .iter()
            .zip(r.element(0, 2))
            .map(move |(&t, z)| {
                let z = z * (-extra * t).exp();
                vec![j, t, z.re, z.im, z.norm()]
            })
            .collect::<Vec<_>>()
    });
    out.csv(cfg, "fig4_coherence", &long_table(&["J", "t", "re_rho_gf", "im_rho_gf", "abs_rho_gf"], rows));

    let scan = scan_transition(system, &axis.values(), TransitionObservable::for_dimension(Dimension::Qutrit), &cfg.fit_window)?;
    out.csv(cfg, "fig4_transition", &scan.to_csv());
    out.json(
        cfg,
        "fig4_summary",
        &json!({"rates": system.rates, "options": system.options, "transition": transition_summary(&scan)}),
    )
}

fn with_delta_max(s: &ParameterSchedule, value: f64) -> ParameterSchedule {
    let mut s = *s;
    if let DrivePath::Encircling { delta_max, .. } = &mut s.path {
        *delta_max = value;
    }
    s
}

fn sweep_summary(r: &SweepResult) -> Value {
    let c = r.chirality();
    let k = (0..c.len()).max_by(|&a, &b| c[a].total_cmp(&c[b]));
    json!({
        "variable": r.variable,
        "max_chirality": k.map(|k| c[k]),
        "argmax": k.map(|k| r.points[k].value),
    })
}

fn cmd_sweeps(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    let base = resolve_schedule(cfg, system)?;
    if !matches!(base.path, DrivePath::Encircling { .. }) {
        return Err(Error::Config("sweeps need an encircling schedule".into()));
    }
    let rho0 = projector(&cfg.initial_state.unwrap_or(InitialState::MinusX).ket(system.d())?);
    let t_values = cfg
        .sweep
        .t
        .clone()
        .unwrap_or_else(|| (2..=24).map(|k| 0.125 * k as f64).collect());
    let d_values = cfg
        .sweep
        .delta_max
        .clone()
        .unwrap_or_else(|| (2..=10).map(|k| 2.0 * std::f64::consts::PI * 0.5 * k as f64).collect());

    let dur_template = with_delta_max(&base, cfg.sweep.delta_max_fixed.unwrap_or(DURATION_SWEEP_DELTA_MAX));
    let by_t = sweep_metrics(system, &dur_template, SweepVariable::Duration, &t_values, &rho0, &cfg.integrator)?;
    out.csv(cfg, "sweep_duration", &by_t.to_csv());

    let mut det_template = base;
    det_template.duration = cfg.sweep.t_fixed.unwrap_or(DETUNING_SWEEP_DURATION);
    let by_d = sweep_metrics(system, &det_template, SweepVariable::DeltaMax, &d_values, &rho0, &cfg.integrator)?;
    out.csv(cfg, "sweep_detuning", &by_d.to_csv());

    // Hermitian limit: same path without dissipation.
    let closed = system.with_rates(Rates::zero())?;
    let mut closed_sched = base;
    closed_sched.rates = Rates::zero();
    let mut herm = CsvTable::new(["initial", "direction", "x", "y", "z"]);
    let mut herm_chirality = BTreeMap::new();
    for (label, state) in [("plus_x", InitialState::PlusX), ("minus_x", InitialState::MinusX)] {
        let rho = projector(&state.ket(system.d())?);
        let mut ends = Vec::new();
        for dir in [Direction::Cw, Direction::Ccw] {
            let r = integrate_scheduled(&closed, &closed_sched.with_direction(dir), &rho, &cfg.integrator)?;
            let [x, y, z] = r.final_bloch();
            herm.push_fields(
                [label.to_string(), dir.as_str().to_string()]
                    .into_iter()
                    .chain([x, y, z].map(format_f64))
                    .collect(),
            );
            ends.push(r.final_state().clone());
        }
        herm_chirality.insert(label, chirality(&ends[0], &ends[1])?);
    }
    out.csv(cfg, "sweep_hermitian_limit", &herm);

    // Constant versus raised-cosine emission at the base loop.
    let mut profiles = CsvTable::new(["gamma_profile", "chirality", "entropy_cw", "entropy_ccw"]);
    let mut profile_summary = BTreeMap::new();
    for (label, profile) in [("constant", GammaProfile::Constant), ("raised_cosine", GammaProfile::RaisedCosine)] {
        let r = sweep_metrics(
            system,
            &base.with_gamma_profile(profile),
            SweepVariable::Duration,
            &[base.duration],
            &rho0,
            &cfg.integrator,
        )?;
        let p = &r.points[0];
        profiles.push_fields(
            std::iter::once(label.to_string())
                .chain([p.chirality, p.entropy_cw, p.entropy_ccw].map(format_f64))
                .collect(),
        );
        profile_summary.insert(label, json!({"entropy_cw": p.entropy_cw, "entropy_ccw": p.entropy_ccw}));
    }
    out.csv(cfg, "sweep_gamma_profile", &profiles);

    out.json(
        cfg,
        "sweeps_summary",
        &json!({
            "duration_sweep": sweep_summary(&by_t),
            "detuning_sweep": sweep_summary(&by_d),
            "hermitian_limit_chirality": herm_chirality,
            "gamma_profile": profile_summary,
        }),
    )
}

fn cmd_steady_state(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    let rho = steady_state(&build_superoperator(system))?;
    let d = system.d();
    let mut t = CsvTable::new(["i", "j", "re", "im"]);
    for i in 0..d {
        for j in 0..d {
            t.push_numbers(&[i as f64, j as f64, rho[(i, j)].re, rho[(i, j)].im]);
        }
    }
    out.csv(cfg, "steady_state", &t);
    let populations: Vec<f64> = (0..d).map(|k| rho[(k, k)].re).collect();
    out.json(
        cfg,
        "steady_state_summary",
        &json!({
            "drive": system.drive,
            "rates": system.rates,
            "populations": populations,
            "bloch": bloch_vector(&rho),
            "entropy": entropy(&rho)?,
        }),
    )
}

fn cmd_trajectories(cfg: &ExperimentConfig, system: &QuantumSystem, out: &mut Outputs) -> Result<()> {
    let schedule = resolve_schedule(cfg, system)?;
    let psi0 = cfg.initial_state.unwrap_or(InitialState::PlusX).ket(system.d())?;
    let (ens, max_error) = ensemble_outputs(cfg, "trajectories", system, &schedule, &psi0, out)?;
    let final_mean: &ComplexMatrix = ens.mean_density.last().ok_or(Error::EmptyMatrix)?;
    out.json(
        cfg,
        "trajectories_summary",
        &json!({
            "n": ens.n_trajectories,
            "master_seed": cfg.ensemble.master_seed,
            "max_trace_distance": max_error,
            "jump_histogram": ens.jump_histogram,
            "final_bloch": bloch_vector(final_mean),
        }),
    )
}
