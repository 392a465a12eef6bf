//! Closed-form qubit eigensystem on resonance without dephasing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DriveParams, Rates};
use crate::numerics::ComplexMatrix;

#[derive(Debug, Clone)]
pub struct AnalyticEigenpair {
    pub eigenvalue: Complex64,
    /// Eigenmatrix (reshaped right eigenvector), unnormalized.
    pub eigenmatrix: ComplexMatrix,
}

/// The four Liouvillian eigenpairs of the resonant qubit with `γφ = 0`.
///
/// Order: steady state (`λ = 0`), x-sector (`λ = −γe/2`), then the y–z pair
/// `λ = −3γe/4 ∓ ¼√(γe² − 64J²)`. The square root is complex above
/// `J = γe/8`, where the last two become a conjugate pair.
pub fn analytic_qubit_eigensystem(drive: &DriveParams, rates: &Rates) -> Result<[AnalyticEigenpair; 4]> {
    if drive.delta != 0.0 {
        return Err(Error::DomainError(format!("Delta = 0, got {}", drive.delta)));
    }
    if rates.gamma_phi != 0.0 {
        return Err(Error::DomainError(format!("gamma_phi = 0, got {}", rates.gamma_phi)));
    }
    let ge = rates.gamma_e;
    let j = drive.j;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let ge_c = c(ge, 0.0);
    let s = c(ge * ge - 64.0 * j * j, 0.0).sqrt();

    let denom = ge * ge + 8.0 * j * j;
    let rho0 = if denom > 0.0 {
        ComplexMatrix::from_rows(&[
            [c((ge * ge + 4.0 * j * j) / denom, 0.0), c(0.0, 2.0 * ge * j / denom)],
            [c(0.0, -2.0 * ge * j / denom), c(4.0 * j * j / denom, 0.0)],
        ])?
    } else {
        // No drive, no decay: every diagonal state is stationary.
        ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)])
    };
    let rho1 = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])?;
    let eigenmatrix = |sign: f64| {
        ComplexMatrix::from_rows(&[
            [-ge_c - s * sign, c(0.0, 8.0 * j)],
            [c(0.0, -8.0 * j), ge_c + s * sign],
        ])
    };

    Ok([
        AnalyticEigenpair {
            eigenvalue: c(0.0, 0.0),
            eigenmatrix: rho0,
        },
        AnalyticEigenpair {
            eigenvalue: c(-ge / 2.0, 0.0),
            eigenmatrix: rho1,
        },
        AnalyticEigenpair {
            eigenvalue: c(-0.75 * ge, 0.0) - s * 0.25,
            eigenmatrix: eigenmatrix(1.0)?,
        },
        AnalyticEigenpair {
            eigenvalue: c(-0.75 * ge, 0.0) + s * 0.25,
            eigenmatrix: eigenmatrix(-1.0)?,
        },
    ])
}

/// Location of the resonant qubit's second-order EP, `J = γe/8 − γφ/4`.
/// `None` when it would sit at `J ≤ 0` (no loss contrast between y and z).
pub fn qubit_ep_coupling(rates: &Rates) -> Option<f64> {
    let j = rates.gamma_e / 8.0 - rates.gamma_phi / 4.0;
    (j > 0.0).then_some(j)
}

/// Location of the qutrit's decoherence-induced EP, `J = γe/4`.
pub fn qutrit_coherence_ep_coupling(rates: &Rates) -> f64 {
    rates.gamma_e / 4.0
}
