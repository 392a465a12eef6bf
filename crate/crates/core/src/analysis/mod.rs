//! Damped-sine fits, LEP transition scans, chirality and entropy.

mod fit;

pub use fit::{fit_damped_sine, DampedSineFit, MIN_SAMPLES};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    bloch_vector, integrate_constant, integrate_scheduled, uniform_grid, IntegratorConfig, DENSITY_TOL,
};
use crate::error::{Error, Result};
use crate::liouvillian::{build_superoperator, qubit_ep_coupling, qutrit_coherence_ep_coupling};
use crate::model::{
    basis_state, projector, qutrit_gf_superposition, Dimension, Direction, DriveParams, DrivePath,
    ParameterSchedule, QuantumSystem,
};
use crate::numerics::{eig_general, hermitian_eigenvalues, trace_distance, ComplexMatrix};
use crate::output::{format_f64, CsvTable};

/// Fits closer than this to the EP coupling are flagged (secular dynamics there).
pub const EP_FLAG_DISTANCE: f64 = 0.05;

/// Eigenvalues this close to zero belong to the steady state and carry no dynamics.
const STEADY_EIGENVALUE_TOL: f64 = 1e-9;

/// Sampling of the signal handed to the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    /// μs.
    pub duration: f64,
    pub samples: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            duration: 10.0,
            samples: 500,
        }
    }
}

impl FitWindow {
    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.duration, self.samples.saturating_sub(1).max(1))
    }

    fn validate(&self) -> Result<()> {
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: format!("fit window must be positive, got {}", self.duration),
            });
        }
        if self.samples < MIN_SAMPLES {
            return Err(Error::InsufficientData {
                needed: MIN_SAMPLES,
                got: self.samples,
            });
        }
        Ok(())
    }
}

/// Part of a complex coherence used as the fitted signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Magnitude,
    Real,
}

/// Signal and initial state of a transition scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionObservable {
    /// `ρ_ee(t)` from `|e⟩⟨e|`.
    ExcitedPopulation,
    /// `ρ_gf(t)` from `(|g⟩ − |f⟩)/√2`; qutrit only.
    GfCoherence { quadrature: Quadrature },
}

impl TransitionObservable {
    /// Natural choice for a system: populations for a qubit, `|ρ_gf|` for a qutrit.
    pub fn for_dimension(dim: Dimension) -> Self {
        match dim {
            Dimension::Qubit => Self::ExcitedPopulation,
            Dimension::Qutrit => Self::GfCoherence {
                quadrature: Quadrature::Magnitude,
            },
        }
    }

    fn element(self) -> (usize, usize) {
        match self {
            Self::ExcitedPopulation => (1, 1),
            Self::GfCoherence { .. } => (0, 2),
        }
    }

    fn initial_state(self, d: usize) -> ComplexMatrix {
        match self {
            Self::ExcitedPopulation => projector(&basis_state(d, 1)),
            Self::GfCoherence { .. } => projector(&qutrit_gf_superposition()),
        }
    }

    fn read(self, rho: &ComplexMatrix) -> f64 {
        let z = rho[self.element()];
        match self {
            Self::ExcitedPopulation => z.re,
            Self::GfCoherence {
                quadrature: Quadrature::Magnitude,
            } => z.norm(),
            Self::GfCoherence {
                quadrature: Quadrature::Real,
            } => z.re,
        }
    }
}

/// Liouvillian eigenvalues that dominate the scanned signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub re_lambda: f64,
    /// `|Im λ|` of the dominant pair.
    pub im_lambda: f64,
    /// Decay rates of the two dominant modes; equal above the EP.
    pub gamma_slow: f64,
    pub gamma_fast: f64,
}

impl Prediction {
    pub fn omega(&self) -> f64 {
        self.im_lambda
    }

    /// The slower branch, which governs the late-time signal.
    pub fn gamma(&self) -> f64 {
        self.gamma_slow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionScan {
    pub observable: TransitionObservable,
    pub j_values: Vec<f64>,
    /// `None` where the fit failed; see `failures`.
    pub fits: Vec<Option<DampedSineFit>>,
    pub predicted: Vec<Prediction>,
    /// `(index, message)` for each failed fit.
    pub failures: Vec<(usize, String)>,
    /// Coupling of the LEP governing the observable, when one exists.
    pub ep_coupling: Option<f64>,
}

impl TransitionScan {
    pub fn len(&self) -> usize {
        self.j_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j_values.is_empty()
    }

    /// Whether point `k` sits within [`EP_FLAG_DISTANCE`] of the EP.
    pub fn near_ep(&self, k: usize) -> bool {
        self.ep_coupling
            .is_some_and(|j_ep| (self.j_values[k] - j_ep).abs() < EP_FLAG_DISTANCE)
    }

    /// First `J` from which every fitted frequency exceeds `threshold`.
    pub fn transition(&self, threshold: f64) -> Option<f64> {
        let oscillating = |k: usize| self.fits[k].is_some_and(|f| f.omega > threshold);
        let n = self.len();
        let mut first = None;
        for k in (0..n).rev() {
            if !oscillating(k) {
                break;
            }
            first = Some(k);
        }
        match first {
            Some(k) if k > 0 => Some(self.j_values[k]),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new([
            "J",
            "omega_fit",
            "gamma_fit",
            "omega_pred",
            "gamma_pred",
            "gamma_pred_fast",
            "amplitude",
            "phase",
            "offset",
            "residual_rms",
            "converged",
            "near_ep",
        ]);
        for (k, (&j, p)) in self.j_values.iter().zip(&self.predicted).enumerate() {
            let mut row = vec![format_f64(j)];
            match &self.fits[k] {
                Some(f) => row.extend([f.omega, f.gamma].map(format_f64)),
                None => row.extend([String::new(), String::new()]),
            }
            row.extend([p.omega(), p.gamma(), p.gamma_fast].map(format_f64));
            match &self.fits[k] {
                Some(f) => {
                    row.extend([f.amplitude, f.phase, f.offset, f.residual_rms].map(format_f64));
                    row.push(f.converged.to_string());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            row.push(self.near_ep(k).to_string());
            t.push_fields(row);
        }
        t
    }
}

/// Integrates and fits the chosen observable for each coupling in `j_values`.
///
/// The template fixes rates, detuning and qutrit options. Under
/// [`ExtraLossModel::UniformShift`](crate::model::ExtraLossModel) the signal
/// carries the extra `e^{−γ t}` envelope and predictions are shifted by `γ`.
pub fn scan_transition(
    template: &QuantumSystem,
    j_values: &[f64],
    observable: TransitionObservable,
    window: &FitWindow,
) -> Result<TransitionScan> {
    if j_values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "J_values",
            reason: "scan needs at least one coupling".into(),
        });
    }
    window.validate()?;
    if matches!(observable, TransitionObservable::GfCoherence { .. }) && template.dim != Dimension::Qutrit {
        return Err(Error::InvalidParameter {
            name: "observable",
            reason: "g-f coherence requires a qutrit".into(),
        });
    }
    let systems = j_values
        .iter()
        .map(|&j| template.with_drive(DriveParams::new(j, template.drive.delta)?))
        .collect::<Result<Vec<_>>>()?;

    let times = window.times();
    let extra = template.uniform_loss_rate();
    let rho0 = observable.initial_state(template.d());
    let cfg = IntegratorConfig::default();

    let points = systems
        .par_iter()
        .map(|sys| -> Result<(std::result::Result<DampedSineFit, String>, Prediction)> {
            let evo = integrate_constant(sys, &rho0, &times, &cfg)?;
            let signal: Vec<f64> = times
                .iter()
                .zip(&evo.states)
                .map(|(t, rho)| observable.read(rho) * (-extra * t).exp())
                .collect();
            let fit = fit_damped_sine(&times, &signal).map_err(|e| e.to_string());
            let pred = predict(sys, &rho0, observable, extra)?;
            Ok((fit, pred))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fits = Vec::with_capacity(points.len());
    let mut predicted = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (k, (fit, pred)) in points.into_iter().enumerate() {
        match fit {
            Ok(f) => fits.push(Some(f)),
            Err(msg) => {
                log::warn!("fit failed at J = {}: {msg}", j_values[k]);
                fits.push(None);
                failures.push((k, msg));
            }
        }
        predicted.push(pred);
    }
    let ep_coupling = match observable {
        TransitionObservable::ExcitedPopulation => qubit_ep_coupling(&template.rates),
        TransitionObservable::GfCoherence { .. } => Some(qutrit_coherence_ep_coupling(&template.rates)),
    };
    Ok(TransitionScan {
        observable,
        j_values: j_values.to_vec(),
        fits,
        predicted,
        failures,
        ep_coupling,
    })
}

/// Picks the two eigenmodes with the largest weight `|⟨o|v_k⟩ (V⁻¹ρ0)_k|`
/// in the observed matrix element.
fn predict(system: &QuantumSystem, rho0: &ComplexMatrix, observable: TransitionObservable, extra: f64) -> Result<Prediction> {
    let sop = build_superoperator(system);
    let eig = eig_general(&sop.matrix)?;
    let v = eig.right_eigenvectors.to_nalgebra();
    let coeffs = match v.clone().try_inverse() {
        Some(inv) => {
            let r = nalgebra::DVector::from_vec(rho0.vectorize());
            (inv * r).iter().copied().collect::<Vec<_>>()
        }
        None => vec![Complex64::new(1.0, 0.0); eig.len()],
    };
    let (i, j) = observable.element();
    let row = i * sop.d + j;
    let mut modes: Vec<(f64, Complex64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.norm() > STEADY_EIGENVALUE_TOL)
        .map(|(k, &l)| ((v[(row, k)] * coeffs[k]).norm(), l))
        .collect();
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (l1, l2) = match modes.as_slice() {
        [] => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        [a] => (a.1, a.1),
        [a, b, ..] => (a.1, b.1),
    };
    let (r1, r2) = (-l1.re + extra, -l2.re + extra);
    Ok(Prediction {
        re_lambda: l1.re - extra,
        im_lambda: l1.im.abs().max(l2.im.abs()),
        gamma_slow: r1.min(r2),
        gamma_fast: r1.max(r2),
    })
}

/// Trace distance between the cw and ccw final states.
pub fn chirality(rho_cw: &ComplexMatrix, rho_ccw: &ComplexMatrix) -> Result<f64> {
    trace_distance(rho_cw, rho_ccw)
}

/// Von Neumann entropy in bits; eigenvalues are clipped to `[0, 1]`.
pub fn entropy(rho: &ComplexMatrix) -> Result<f64> {
    rho.ensure_square()?;
    let herm = rho.hermiticity_defect();
    if herm > DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!("Hermiticity defect {herm:.3e}")));
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    Ok(hermitian_eigenvalues(rho)?
        .into_iter()
        .map(|p| p.clamp(0.0, 1.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0))
}

/// Loop parameter varied by [`sweep_metrics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Duration,
    DeltaMax,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            Self::Duration => "T",
            Self::DeltaMax => "Delta_max",
        }
    }

    fn apply(self, template: &ParameterSchedule, value: f64) -> Result<ParameterSchedule> {
        let mut s = *template;
        match (self, &mut s.path) {
            (Self::Duration, _) => s.duration = value,
            (Self::DeltaMax, DrivePath::Encircling { delta_max, .. }) => *delta_max = value,
            (Self::DeltaMax, DrivePath::Constant { .. }) => {
                return Err(Error::InvalidParameter {
                    name: "vary",
                    reason: "Delta_max sweep needs an encircling path".into(),
                })
            }
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub chirality: f64,
    pub entropy_cw: f64,
    pub entropy_ccw: f64,
    pub bloch_cw: [f64; 3],
    pub bloch_ccw: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn chirality(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.chirality).collect()
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new([
            self.variable.column(),
            "chirality",
            "entropy_cw",
            "entropy_ccw",
            "x_cw",
            "y_cw",
            "z_cw",
            "x_ccw",
            "y_ccw",
            "z_ccw",
        ]);
        for p in &self.points {
            let [a, b, c] = p.bloch_cw;
            let [d, e, f] = p.bloch_ccw;
            t.push_numbers(&[p.value, p.chirality, p.entropy_cw, p.entropy_ccw, a, b, c, d, e, f]);
        }
        t
    }
}

/// Final-state chirality and entropies of cw/ccw loops for each value of `vary`.
pub fn sweep_metrics(
    system: &QuantumSystem,
    template: &ParameterSchedule,
    vary: SweepVariable,
    values: &[f64],
    rho0: &ComplexMatrix,
    cfg: &IntegratorConfig,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "values",
            reason: "sweep needs at least one value".into(),
        });
    }
    let schedules = values
        .iter()
        .map(|&v| vary.apply(template, v))
        .collect::<Result<Vec<_>>>()?;
    let points = schedules
        .par_iter()
        .zip(values)
        .map(|(s, &value)| {
            let run = |dir: Direction| integrate_scheduled(system, &s.with_direction(dir), rho0, cfg);
            let cw = run(Direction::Cw)?;
            let ccw = run(Direction::Ccw)?;
            let (a, b) = (cw.final_state(), ccw.final_state());
            Ok(SweepPoint {
                value,
                chirality: chirality(a, b)?,
                entropy_cw: entropy(a)?,
                entropy_ccw: entropy(b)?,
                bloch_cw: bloch_vector(a),
                bloch_ccw: bloch_vector(b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { variable: vary, points })
}
