use nalgebra::SymmetricEigen;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Largest induced 1-norm accepted by [`expm`]. Beyond this the scaling step
/// needs more than ~10 squarings and entries of non-dissipative generators
/// overflow double precision.
pub const EXPM_NORM_BOUND: f64 = 700.0;

/// Hermiticity tolerance used by [`trace_distance`] and the density-matrix checks.
pub const HERMITIAN_TOL: f64 = 1e-8;

fn one_norm(a: &ComplexMatrix) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.ensure_square()?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = one_norm(a);
    if norm > EXPM_NORM_BOUND {
        return Err(Error::Overflow {
            norm,
            bound: EXPM_NORM_BOUND,
        });
    }
    let out = ComplexMatrix::from_nalgebra(&a.to_nalgebra().exp());
    if !out.is_finite() {
        return Err(Error::Overflow {
            norm,
            bound: EXPM_NORM_BOUND,
        });
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.ensure_square()?;
    let defect = a.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let eig = SymmetricEigen::new(a.hermitian_part().to_nalgebra());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// ½ Σ |eigenvalues(a − b)|.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    a.ensure_same_shape(b)?;
    for m in [a, b] {
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
    }
    let diff = a - b;
    Ok(0.5 * hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}
