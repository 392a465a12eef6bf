//! Master-equation and Bloch-equation time evolution.
//!
//! Constant generators are propagated with `expm(𝓛t)`. Scheduled generators
//! are treated as piecewise constant with `𝓛` rebuilt at each step midpoint,
//! which is second-order accurate in `dt` and preserves trace exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{build_superoperator, Superoperator};
use crate::model::{Dimension, DriveParams, ParameterSchedule, QuantumSystem, Rates};
use crate::numerics::{expm, hermitian_eigenvalues, ComplexMatrix};
use crate::output::CsvTable;

/// Tolerance for accepting an initial density matrix.
pub const DENSITY_TOL: f64 = 1e-8;

/// Minimum number of steps per scheduled loop.
pub const MIN_SCHEDULE_STEPS: usize = 1000;

/// Largest `|𝓛|_F·t` handed to a single `expm` call.
const MAX_EXPM_ARGUMENT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    PropagatorExpm,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Time step in μs.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    /// Record every n-th step of a scheduled run.
    #[serde(default = "default_store_every")]
    pub store_every: usize,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_store_every() -> usize {
    10
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            method: Method::default(),
            store_every: default_store_every(),
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_store_every(mut self, store_every: usize) -> Self {
        self.store_every = store_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if self.store_every == 0 {
            return Err(Error::InvalidParameter {
                name: "store_every",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Derived quantities of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    /// `(x, y, z)` of the g–e manifold: `x = 2 Re ρge`, `y = −2 Im ρge`, `z = ρgg − ρee`.
    pub bloch: [f64; 3],
    /// Diagonal of `ρ`.
    pub populations: Vec<f64>,
    /// `ρgf` and `ρef` for a qutrit.
    pub rho_gf: Option<Complex64>,
    pub rho_ef: Option<Complex64>,
}

impl Observables {
    pub fn of(rho: &ComplexMatrix) -> Self {
        let d = rho.rows();
        let populations = (0..d).map(|k| rho[(k, k)].re).collect();
        let (rho_gf, rho_ef) = if d == 3 {
            (Some(rho[(0, 2)]), Some(rho[(1, 2)]))
        } else {
            (None, None)
        };
        Self {
            bloch: bloch_vector(rho),
            populations,
            rho_gf,
            rho_ef,
        }
    }

    pub fn rho_ee(&self) -> f64 {
        self.populations[1]
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub dim: Dimension,
    /// Sample times in μs.
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    pub observables: Vec<Observables>,
}

impl EvolutionResult {
    fn new(dim: Dimension) -> Self {
        Self {
            dim,
            times: Vec::new(),
            states: Vec::new(),
            observables: Vec::new(),
        }
    }

    /// Wraps precomputed states, e.g. an ensemble mean.
    pub fn from_states(dim: Dimension, times: Vec<f64>, states: Vec<ComplexMatrix>) -> Self {
        let mut r = Self::new(dim);
        for (t, rho) in times.into_iter().zip(states) {
            r.push(t, rho);
        }
        r
    }

    fn push(&mut self, t: f64, rho: ComplexMatrix) {
        self.times.push(t);
        self.observables.push(Observables::of(&rho));
        self.states.push(rho);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &ComplexMatrix {
        self.states.last().expect("evolution has at least one sample")
    }

    pub fn final_bloch(&self) -> [f64; 3] {
        self.observables.last().expect("evolution has at least one sample").bloch
    }

    /// Population of level `k` over time.
    pub fn population(&self, k: usize) -> Vec<f64> {
        self.observables.iter().map(|o| o.populations[k]).collect()
    }

    /// Bloch component `axis` (0 = x, 1 = y, 2 = z) over time.
    pub fn bloch_component(&self, axis: usize) -> Vec<f64> {
        self.observables.iter().map(|o| o.bloch[axis]).collect()
    }

    /// Entry `(i, j)` of `ρ` over time.
    pub fn element(&self, i: usize, j: usize) -> Vec<Complex64> {
        self.states.iter().map(|r| r[(i, j)]).collect()
    }

    /// `t`, `re/im_rho_ij`, then `x,y,z` (qubit) or populations and
    /// `re/im/abs` of `ρgf`, `ρef` (qutrit).
    pub fn to_csv(&self) -> CsvTable {
        let d = self.dim.size();
        let labels = ["g", "e", "f"];
        let mut header = vec!["t".to_string()];
        for i in 0..d {
            for j in 0..d {
                header.push(format!("re_rho_{}{}", labels[i], labels[j]));
                header.push(format!("im_rho_{}{}", labels[i], labels[j]));
            }
        }
        match self.dim {
            Dimension::Qubit => header.extend(["x", "y", "z"].map(String::from)),
            Dimension::Qutrit => header.extend(
                [
                    "rho_gg", "rho_ee", "rho_ff", "re_rho_gf", "im_rho_gf", "abs_rho_gf", "re_rho_ef", "im_rho_ef",
                    "abs_rho_ef",
                ]
                .map(String::from),
            ),
        }
        let mut table = CsvTable::new(header);
        for ((t, rho), obs) in self.times.iter().zip(&self.states).zip(&self.observables) {
            let mut row = vec![*t];
            for z in rho.as_slice() {
                row.push(z.re);
                row.push(z.im);
            }
            match self.dim {
                Dimension::Qubit => row.extend(obs.bloch),
                Dimension::Qutrit => {
                    row.extend(&obs.populations);
                    for c in [obs.rho_gf, obs.rho_ef].into_iter().flatten() {
                        row.extend([c.re, c.im, c.norm()]);
                    }
                }
            }
            table.push_numbers(&row);
        }
        table
    }
}

/// Checks Hermiticity, unit trace and positivity within [`DENSITY_TOL`].
pub fn validate_density_matrix(rho: &ComplexMatrix, d: usize) -> Result<()> {
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: (d, d),
            found: (rho.rows(), rho.cols()),
        });
    }
    let herm = rho.hermiticity_defect();
    if herm > DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!("Hermiticity defect {herm:.3e}")));
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    let min = hermitian_eigenvalues(&rho.hermitian_part())?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min < -DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// `(x, y, z)` of the g–e block.
pub fn bloch_vector(rho: &ComplexMatrix) -> [f64; 3] {
    let ge = rho[(0, 1)];
    [2.0 * ge.re, -2.0 * ge.im, rho[(0, 0)].re - rho[(1, 1)].re]
}

/// `ρ = (I + xσx + yσy + zσz)/2`.
pub fn density_from_bloch(v: [f64; 3]) -> ComplexMatrix {
    let [x, y, z] = v;
    let c = Complex64::new;
    ComplexMatrix::from_rows(&[
        [c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0)],
        [c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
    ])
    .expect("finite Bloch vector")
}

/// `expm(𝓛t)`, split into factors small enough for the exponential.
pub fn propagator(sop: &Superoperator, t: f64) -> Result<ComplexMatrix> {
    let scale = sop.norm() * t.abs();
    let pieces = ((scale / MAX_EXPM_ARGUMENT).ceil() as usize).max(1);
    let step = expm(&sop.matrix.scale_real(t / pieces as f64))?;
    let mut out = step.clone();
    for _ in 1..pieces {
        out = &out * &step;
    }
    Ok(out)
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: "times must be finite and non-negative".into(),
        });
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedTimes);
    }
    Ok(())
}

/// `ρ(t_k) = expm(𝓛 t_k) vec(ρ0)` on an increasing, non-negative grid.
pub fn integrate_constant(
    system: &QuantumSystem,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    let d = system.d();
    validate_density_matrix(rho0, d)?;
    check_times(t_grid)?;
    let sop = build_superoperator(system);
    let mut result = EvolutionResult::new(system.dim);
    let mut v = rho0.vectorize();
    let mut t_prev = 0.0;
    for &t in t_grid {
        let span = t - t_prev;
        if span > 0.0 {
            v = match cfg.method {
                Method::PropagatorExpm => propagator(&sop, span)?.matvec(&v),
                Method::Rk4 => {
                    let n = (span / cfg.dt).ceil().max(1.0) as usize;
                    let h = span / n as f64;
                    (0..n).fold(v, |v, _| rk4_step(&sop.matrix, &sop.matrix, &sop.matrix, &v, h))
                }
            };
        }
        result.push(t, ComplexMatrix::unvectorize(&v, d)?);
        t_prev = t;
    }
    Ok(result)
}

fn rk4_step(
    l0: &ComplexMatrix,
    lmid: &ComplexMatrix,
    l1: &ComplexMatrix,
    v: &[Complex64],
    h: f64,
) -> Vec<Complex64> {
    let axpy = |a: &[Complex64], s: f64, b: &[Complex64]| -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, y)| x + y * s).collect()
    };
    let k1 = l0.matvec(v);
    let k2 = lmid.matvec(&axpy(v, h / 2.0, &k1));
    let k3 = lmid.matvec(&axpy(v, h / 2.0, &k2));
    let k4 = l1.matvec(&axpy(v, h, &k3));
    v.iter()
        .enumerate()
        .map(|(i, x)| x + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
        .collect()
}

/// Number of steps used for a scheduled run: `⌈T/dt⌉`, at least [`MIN_SCHEDULE_STEPS`].
pub fn schedule_steps(schedule: &ParameterSchedule, cfg: &IntegratorConfig) -> usize {
    ((schedule.duration / cfg.dt).ceil() as usize).max(MIN_SCHEDULE_STEPS)
}

fn scheduled_generator(system: &QuantumSystem, schedule: &ParameterSchedule, t: f64) -> Result<Superoperator> {
    let (drive, rates) = schedule.eval(t.clamp(0.0, schedule.duration))?;
    Ok(build_superoperator(&scheduled_system(system, drive, rates)?))
}

fn scheduled_system(system: &QuantumSystem, drive: DriveParams, rates: Rates) -> Result<QuantumSystem> {
    QuantumSystem::with_options(system.dim, drive, rates, system.options)
}

/// Piecewise-constant propagation along `schedule`; `system` supplies the
/// dimension and qutrit options, the schedule supplies drive and rates.
///
/// The step is `T/n` with `n` from [`schedule_steps`], so `dt ≤ T/1000`.
/// States are recorded at `t = 0`, every `store_every` steps, and at `T`.
pub fn integrate_scheduled(
    system: &QuantumSystem,
    schedule: &ParameterSchedule,
    rho0: &ComplexMatrix,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    schedule.validate()?;
    let d = system.d();
    validate_density_matrix(rho0, d)?;
    let n = schedule_steps(schedule, cfg);
    let h = schedule.duration / n as f64;

    let mut result = EvolutionResult::new(system.dim);
    let mut v = rho0.vectorize();
    result.push(0.0, rho0.clone());
    for k in 0..n {
        let t0 = k as f64 * h;
        v = match cfg.method {
            Method::PropagatorExpm => {
                let l = scheduled_generator(system, schedule, t0 + 0.5 * h)?;
                expm(&l.matrix.scale_real(h))?.matvec(&v)
            }
            Method::Rk4 => {
                let l0 = scheduled_generator(system, schedule, t0)?;
                let lm = scheduled_generator(system, schedule, t0 + 0.5 * h)?;
                let l1 = scheduled_generator(system, schedule, t0 + h)?;
                rk4_step(&l0.matrix, &lm.matrix, &l1.matrix, &v, h)
            }
        };
        if (k + 1) % cfg.store_every == 0 || k + 1 == n {
            let t = if k + 1 == n { schedule.duration } else { (k + 1) as f64 * h };
            result.push(t, ComplexMatrix::unvectorize(&v, d)?);
        }
    }
    Ok(result)
}

/// Right-hand side of the qubit Bloch equation
/// `d(x,y,z)/dt = −M (x,y,z) + (0, 0, γe)` with
/// `M = [[γe/2+γφ, Δ, 0], [−Δ, γe/2+γφ, 2J], [0, −2J, γe]]`.
pub fn bloch_rhs(params: &DriveParams, rates: &Rates, v: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = v;
    let g2 = rates.gamma_e / 2.0 + rates.gamma_phi;
    let (j, delta) = (params.j, params.delta);
    [
        -(g2 * x + delta * y),
        -(-delta * x + g2 * y + 2.0 * j * z),
        -(-2.0 * j * y + rates.gamma_e * z) + rates.gamma_e,
    ]
}

/// RK4 integration of [`bloch_rhs`] with step at most `dt`, landing on every grid time.
pub fn integrate_bloch(
    params: &DriveParams,
    rates: &Rates,
    v0: [f64; 3],
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<[f64; 3]>> {
    check_times(t_grid)?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let f = |v: [f64; 3]| bloch_rhs(params, rates, v);
    let add = |a: [f64; 3], s: f64, b: [f64; 3]| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let mut out = Vec::with_capacity(t_grid.len());
    let mut v = v0;
    let mut t_prev = 0.0;
    for &t in t_grid {
        let span = t - t_prev;
        if span > 0.0 {
            let n = (span / dt).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = f(v);
                let k2 = f(add(v, h / 2.0, k1));
                let k3 = f(add(v, h / 2.0, k2));
                let k4 = f(add(v, h, k3));
                for i in 0..3 {
                    v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        out.push(v);
        t_prev = t;
    }
    Ok(out)
}

/// Evenly spaced grid `0, T/n, …, T`.
pub fn uniform_grid(duration: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| duration * k as f64 / n as f64).collect()
}
