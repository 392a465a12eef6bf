//! Driven dissipative qubit and qutrit: Hamiltonians, jump operators and
//! time-dependent parameter schedules.
//!
//! Basis order is `(|g⟩, |e⟩)` or `(|g⟩, |e⟩, |f⟩)` with index 0 the ground
//! state, and `σz = |g⟩⟨g| − |e⟩⟨e|`. Rates are in μs⁻¹, couplings and
//! detunings in rad·μs⁻¹.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Qubit,
    Qutrit,
}

impl Dimension {
    pub fn size(self) -> usize {
        match self {
            Dimension::Qubit => 2,
            Dimension::Qutrit => 3,
        }
    }

    pub fn from_size(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Qubit),
            3 => Ok(Dimension::Qutrit),
            _ => Err(Error::InvalidParameter {
                name: "dim",
                reason: format!("expected 2 or 3, got {d}"),
            }),
        }
    }
}

/// Dissipation rates in μs⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    /// Spontaneous emission |e⟩ → |g⟩.
    pub gamma_e: f64,
    /// Pure dephasing of the g–e transition.
    pub gamma_phi: f64,
    /// Decay out of |f⟩ (qutrit only).
    #[serde(default)]
    pub gamma_f: f64,
    /// Extra decoherence of |f⟩ (qutrit only).
    #[serde(default)]
    pub gamma_f_extra: f64,
}

impl Rates {
    pub fn new(gamma_e: f64, gamma_phi: f64) -> Result<Self> {
        Self::qutrit(gamma_e, gamma_phi, 0.0, 0.0)
    }

    pub fn qutrit(gamma_e: f64, gamma_phi: f64, gamma_f: f64, gamma_f_extra: f64) -> Result<Self> {
        let r = Self {
            gamma_e,
            gamma_phi,
            gamma_f,
            gamma_f_extra,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn zero() -> Self {
        Self {
            gamma_e: 0.0,
            gamma_phi: 0.0,
            gamma_f: 0.0,
            gamma_f_extra: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_e", self.gamma_e),
            ("gamma_phi", self.gamma_phi),
            ("gamma_f", self.gamma_f),
            ("gamma_f_extra", self.gamma_f_extra),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("rate must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Drive coupling `J` and detuning `Δ`, both in rad·μs⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveParams {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Delta", default)]
    pub delta: f64,
}

impl DriveParams {
    /// Negative `J` is gauge-equivalent to positive `J` and is rejected.
    pub fn new(j: f64, delta: f64) -> Result<Self> {
        let d = Self { j, delta };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.j.is_finite() || self.j < 0.0 {
            return Err(Error::InvalidParameter {
                name: "J",
                reason: format!("coupling must be finite and non-negative, got {}", self.j),
            });
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "Delta",
                reason: format!("detuning must be finite, got {}", self.delta),
            });
        }
        Ok(())
    }
}

/// Target level of the |f⟩ decay channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FDecayTarget {
    /// `L_f = √γf |e⟩⟨f|` (cascade).
    #[default]
    Excited,
    /// `L_f = √γf |g⟩⟨f|`.
    Ground,
}

/// How `gamma_f_extra` enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraLossModel {
    /// Jump operator `√γ_extra |f⟩⟨f|` in the master equation.
    #[default]
    Dephasing,
    /// Not part of the dynamics; applied afterwards as an `e^{−γ_extra t}`
    /// envelope on observables and a `−γ_extra` shift of eigenvalue real parts.
    UniformShift,
}

/// Qutrit-specific modelling choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QutritOptions {
    #[serde(default)]
    pub f_decay_target: FDecayTarget,
    #[serde(default)]
    pub extra_loss: ExtraLossModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub label: &'static str,
    pub matrix: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    pub dim: Dimension,
    pub rates: Rates,
    pub drive: DriveParams,
    pub options: QutritOptions,
    jump_operators: Vec<JumpOperator>,
}

impl QuantumSystem {
    pub fn new(dim: Dimension, drive: DriveParams, rates: Rates) -> Result<Self> {
        Self::with_options(dim, drive, rates, QutritOptions::default())
    }

    pub fn qubit(j: f64, delta: f64, gamma_e: f64, gamma_phi: f64) -> Result<Self> {
        Self::new(
            Dimension::Qubit,
            DriveParams::new(j, delta)?,
            Rates::new(gamma_e, gamma_phi)?,
        )
    }

    pub fn with_options(dim: Dimension, drive: DriveParams, rates: Rates, options: QutritOptions) -> Result<Self> {
        drive.validate()?;
        rates.validate()?;
        let jump_operators = jump_operators_with(&rates, dim, &options);
        Ok(Self {
            dim,
            rates,
            drive,
            options,
            jump_operators,
        })
    }

    pub fn d(&self) -> usize {
        self.dim.size()
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        hamiltonian(&self.drive, self.dim)
    }

    pub fn jump_operators(&self) -> &[JumpOperator] {
        &self.jump_operators
    }

    /// Same system with a different drive.
    pub fn with_drive(&self, drive: DriveParams) -> Result<Self> {
        Self::with_options(self.dim, drive, self.rates, self.options)
    }

    /// Same system with different rates.
    pub fn with_rates(&self, rates: Rates) -> Result<Self> {
        Self::with_options(self.dim, self.drive, rates, self.options)
    }

    /// Envelope rate applied to observables in [`ExtraLossModel::UniformShift`] mode.
    pub fn uniform_loss_rate(&self) -> f64 {
        match (self.dim, self.options.extra_loss) {
            (Dimension::Qutrit, ExtraLossModel::UniformShift) => self.rates.gamma_f_extra,
            _ => 0.0,
        }
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `|a⟩⟨b|` in dimension `d`.
fn ket_bra(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(a, b)] = real(1.0);
    m
}

/// `H_c = J(|g⟩⟨e| + |e⟩⟨g|) + Δ/2 (|g⟩⟨g| − |e⟩⟨e|)`, with no drive on |f⟩.
pub fn hamiltonian(drive: &DriveParams, dim: Dimension) -> ComplexMatrix {
    let d = dim.size();
    let mut h = ComplexMatrix::zeros(d, d);
    h[(0, 1)] = real(drive.j);
    h[(1, 0)] = real(drive.j);
    h[(0, 0)] = real(drive.delta / 2.0);
    h[(1, 1)] = real(-drive.delta / 2.0);
    h
}

/// Jump operators with default qutrit options. Zero-rate channels are omitted.
pub fn jump_operators(rates: &Rates, dim: Dimension) -> Vec<JumpOperator> {
    jump_operators_with(rates, dim, &QutritOptions::default())
}

pub fn jump_operators_with(rates: &Rates, dim: Dimension, options: &QutritOptions) -> Vec<JumpOperator> {
    let d = dim.size();
    let mut ops = Vec::new();
    if rates.gamma_e > 0.0 {
        ops.push(JumpOperator {
            label: "L_e",
            matrix: ket_bra(d, 0, 1).scale_real(rates.gamma_e.sqrt()),
        });
    }
    if rates.gamma_phi > 0.0 {
        // diag(1, −1) on the g–e manifold, zero on |f⟩.
        let mut sz = ComplexMatrix::zeros(d, d);
        sz[(0, 0)] = real(1.0);
        sz[(1, 1)] = real(-1.0);
        ops.push(JumpOperator {
            label: "L_phi",
            matrix: sz.scale_real((rates.gamma_phi / 2.0).sqrt()),
        });
    }
    if dim == Dimension::Qutrit {
        if rates.gamma_f > 0.0 {
            let target = match options.f_decay_target {
                FDecayTarget::Excited => 1,
                FDecayTarget::Ground => 0,
            };
            ops.push(JumpOperator {
                label: "L_f",
                matrix: ket_bra(d, target, 2).scale_real(rates.gamma_f.sqrt()),
            });
        }
        if rates.gamma_f_extra > 0.0 && options.extra_loss == ExtraLossModel::Dephasing {
            ops.push(JumpOperator {
                label: "L_f_extra",
                matrix: ket_bra(d, 2, 2).scale_real(rates.gamma_f_extra.sqrt()),
            });
        }
    }
    ops
}

/// Basis state `|k⟩` in dimension `d`.
pub fn basis_state(d: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![real(0.0); d];
    v[k] = real(1.0);
    v
}

/// `|±x⟩ = (|g⟩ ± |e⟩)/√2`.
pub fn plus_x() -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![real(s), real(s)]
}

pub fn minus_x() -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![real(s), real(-s)]
}

/// `(|g⟩ − |f⟩)/√2`, the coherence-reference preparation for the qutrit.
pub fn qutrit_gf_superposition() -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![real(s), real(0.0), real(-s)]
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(psi: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::outer(psi, psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Cw,
    Ccw,
}

impl Direction {
    /// Sign multiplying `Δ(t)`: `+` for ccw, `−` for cw.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Ccw => 1.0,
            Direction::Cw => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Ccw => Direction::Cw,
            Direction::Cw => Direction::Ccw,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Ccw => "ccw",
            Direction::Cw => "cw",
        }
    }
}

/// Drive trajectory through `(J, Δ)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DrivePath {
    /// `J(t) = J_max cos²(πt/T)`, `Δ(t) = ±Δ_max sin(2πt/T)`.
    Encircling {
        #[serde(rename = "J_max")]
        j_max: f64,
        #[serde(rename = "Delta_max")]
        delta_max: f64,
    },
    /// Time-independent drive.
    Constant {
        #[serde(rename = "J")]
        j: f64,
        #[serde(rename = "Delta", default)]
        delta: f64,
    },
}

/// Time profile of the emission rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaProfile {
    #[default]
    Constant,
    /// `γe(t) = γe0 [1 − cos(2πt/T)] / 2`.
    RaisedCosine,
}

pub const DEFAULT_J_MAX: f64 = 16.0;
pub const DEFAULT_DELTA_MAX: f64 = 10.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSchedule {
    /// Loop duration `T` in μs.
    pub duration: f64,
    pub direction: Direction,
    pub path: DrivePath,
    /// Rates at full strength; `gamma_e` is modulated by `gamma_profile`.
    pub rates: Rates,
    #[serde(default)]
    pub gamma_profile: GammaProfile,
}

impl ParameterSchedule {
    /// The standard loop: `J_max = 16`, `Δ_max = 10π`.
    pub fn encircling(duration: f64, direction: Direction, rates: Rates) -> Result<Self> {
        Self::encircling_with(duration, direction, DEFAULT_J_MAX, DEFAULT_DELTA_MAX, rates)
    }

    pub fn encircling_with(
        duration: f64,
        direction: Direction,
        j_max: f64,
        delta_max: f64,
        rates: Rates,
    ) -> Result<Self> {
        let s = Self {
            duration,
            direction,
            path: DrivePath::Encircling { j_max, delta_max },
            rates,
            gamma_profile: GammaProfile::Constant,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(duration: f64, drive: DriveParams, rates: Rates) -> Result<Self> {
        let s = Self {
            duration,
            direction: Direction::Ccw,
            path: DrivePath::Constant {
                j: drive.j,
                delta: drive.delta,
            },
            rates,
            gamma_profile: GammaProfile::Constant,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_gamma_profile(mut self, profile: GammaProfile) -> Self {
        self.gamma_profile = profile;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: format!("loop duration must be positive, got {}", self.duration),
            });
        }
        self.rates.validate()?;
        match self.path {
            DrivePath::Encircling { j_max, delta_max } => {
                if !j_max.is_finite() || j_max < 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "J_max",
                        reason: format!("must be finite and non-negative, got {j_max}"),
                    });
                }
                if !delta_max.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "Delta_max",
                        reason: format!("must be finite, got {delta_max}"),
                    });
                }
            }
            DrivePath::Constant { j, delta } => {
                DriveParams::new(j, delta)?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<(DriveParams, Rates)> {
        schedule_eval(self, t)
    }
}

/// Drive and rates at time `t ∈ [0, T]`.
pub fn schedule_eval(s: &ParameterSchedule, t: f64) -> Result<(DriveParams, Rates)> {
    if !(0.0..=s.duration).contains(&t) {
        return Err(Error::OutOfRange { t, duration: s.duration });
    }
    let phase = t / s.duration;
    let drive = match s.path {
        DrivePath::Encircling { j_max, delta_max } => {
            let c = (PI * phase).cos();
            DriveParams {
                j: j_max * c * c,
                delta: s.direction.sign() * delta_max * (2.0 * PI * phase).sin(),
            }
        }
        DrivePath::Constant { j, delta } => DriveParams { j, delta },
    };
    let mut rates = s.rates;
    if s.gamma_profile == GammaProfile::RaisedCosine {
        rates.gamma_e = s.rates.gamma_e * (1.0 - (2.0 * PI * phase).cos()) / 2.0;
    }
    Ok((drive, rates))
}
