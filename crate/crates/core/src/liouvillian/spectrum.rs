use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Superoperator;
use crate::error::{Error, Result};
use crate::model::DriveParams;
use crate::numerics::{eig_general, principal_angle, ComplexMatrix};

/// Zero-eigenvalue tolerance for steady states.
pub const STEADY_STATE_TOL: f64 = 1e-9;

/// Coalescence tolerances for exceptional-point classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpTolerances {
    /// Eigenvalue gap threshold, relative to `|𝓛|_F`.
    pub gap_rel: f64,
    /// Eigenvector principal-angle threshold in radians.
    pub angle: f64,
}

impl Default for EpTolerances {
    fn default() -> Self {
        Self {
            gap_rel: 1e-4,
            angle: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub params: DriveParams,
    /// Canonical order (ascending real part, then imaginary part).
    pub eigenvalues: Vec<Complex64>,
    /// Unit right eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
    pub min_eigenvalue_gap: f64,
    pub min_eigenvector_angle: f64,
    /// 0 when no defective coalescence, otherwise the number of coalescing branches.
    pub ep_order: u8,
    /// Indices of the coalescing eigenvalues when `ep_order > 0`.
    pub coalescing: Vec<usize>,
}

impl SpectralResult {
    /// Number of eigenvalues that are real up to rounding, see [`real_eigenvalue_count`].
    pub fn real_count(&self) -> usize {
        real_eigenvalue_count(&self.eigenvalues)
    }
}

pub fn spectrum(sop: &Superoperator) -> Result<SpectralResult> {
    spectrum_with(sop, &EpTolerances::default())
}

pub fn spectrum_with(sop: &Superoperator, tol: &EpTolerances) -> Result<SpectralResult> {
    let eig = eig_general(&sop.matrix)?;
    let n = eig.len();
    let gap_tol = tol.gap_rel * sop.norm();

    let vectors: Vec<Vec<Complex64>> = (0..n).map(|k| eig.eigenvector(k)).collect();
    let mut min_gap = f64::INFINITY;
    let mut min_angle = f64::INFINITY;
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (eig.eigenvalues[i] - eig.eigenvalues[j]).norm();
            let angle = principal_angle(&vectors[i], &vectors[j]);
            min_gap = min_gap.min(gap);
            min_angle = min_angle.min(angle);
            if gap <= gap_tol && angle <= tol.angle {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    if n < 2 {
        min_gap = 0.0;
        min_angle = 0.0;
    }

    let mut best: Vec<usize> = Vec::new();
    for root in 0..n {
        let members: Vec<usize> = (0..n).filter(|&k| find(&mut parent, k) == root).collect();
        if members.len() >= 2 && members.len() > best.len() {
            best = members;
        }
    }

    Ok(SpectralResult {
        params: sop.drive,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.right_eigenvectors,
        min_eigenvalue_gap: min_gap,
        min_eigenvector_angle: min_angle,
        ep_order: best.len() as u8,
        coalescing: best,
    })
}

fn find(parent: &mut [usize], mut k: usize) -> usize {
    while parent[k] != k {
        parent[k] = parent[parent[k]];
        k = parent[k];
    }
    k
}

/// Counts eigenvalues that are their own conjugate partner.
///
/// Liouvillian spectra are closed under conjugation. An eigenvalue counts
/// as real when `2|Im λ|` is no larger than its distance to the conjugate of
/// any other eigenvalue; this stays reliable right up to a coalescence, where
/// a fixed absolute threshold on `Im λ` does not.
pub fn real_eigenvalue_count(eigenvalues: &[Complex64]) -> usize {
    eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, l)| {
            let self_dist = 2.0 * l.im.abs();
            eigenvalues
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .all(|(_, m)| self_dist <= (l - m.conj()).norm())
        })
        .count()
}

/// Null eigenvector of `𝓛` as a Hermitian, unit-trace density matrix.
pub fn steady_state(sop: &Superoperator) -> Result<ComplexMatrix> {
    let eig = eig_general(&sop.matrix)?;
    let zeros: Vec<usize> = (0..eig.len())
        .filter(|&k| eig.eigenvalues[k].norm() <= STEADY_STATE_TOL)
        .collect();
    match zeros.len() {
        0 => {
            let closest = eig.eigenvalues.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            Err(Error::NoSteadyState {
                closest,
                tol: STEADY_STATE_TOL,
            })
        }
        1 => {
            let v = eig.eigenvector(zeros[0]);
            let raw = ComplexMatrix::unvectorize(&v, sop.d)?;
            let tr = raw.trace();
            if tr.norm() < 1e-12 {
                return Err(Error::NoSteadyState {
                    closest: eig.eigenvalues[zeros[0]].norm(),
                    tol: STEADY_STATE_TOL,
                });
            }
            Ok(raw.scale(tr.inv()).hermitian_part())
        }
        count => Err(Error::DegenerateSteadyState { count }),
    }
}

/// Monic characteristic polynomial `det(λI − A)` by Faddeev–LeVerrier.
///
/// Returns `c` with `p(λ) = Σ_k c[k] λ^k`, `c[n] = 1`. The coefficients are
/// smooth in the matrix entries even where eigenvalues are not, which makes
/// them the right object for locating higher-order coalescences.
pub fn characteristic_polynomial(a: &ComplexMatrix) -> Vec<Complex64> {
    let n = a.rows();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(n, n);
    let id = ComplexMatrix::identity(n);
    for k in 1..=n {
        m = &(a * &m) + &id.scale(coeffs[n - k + 1]);
        let am = a * &m;
        coeffs[n - k] = -am.trace() / (k as f64);
    }
    coeffs
}

/// Re-pairs eigenvalue lists along a parameter sweep into continuous branches.
///
/// Each new point is matched greedily to a linear extrapolation of the
/// branches, taking the globally closest remaining pair first.
pub fn track_branches(points: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let n = first.len();
    let mut branches: Vec<Vec<Complex64>> = first.iter().map(|&z| vec![z]).collect();
    for next in &points[1..] {
        let predicted: Vec<Complex64> = branches
            .iter()
            .map(|b| match b.len() {
                0 => unreachable!(),
                1 => b[0],
                len => b[len - 1] * 2.0 - b[len - 2],
            })
            .collect();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for (bi, p) in predicted.iter().enumerate() {
            for (ei, z) in next.iter().enumerate() {
                pairs.push(((p - z).norm(), bi, ei));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut branch_done = vec![false; n];
        let mut eig_done = vec![false; next.len()];
        let mut assigned = vec![Complex64::new(0.0, 0.0); n];
        for (_, bi, ei) in pairs {
            if branch_done[bi] || eig_done[ei] {
                continue;
            }
            branch_done[bi] = true;
            eig_done[ei] = true;
            assigned[bi] = next[ei];
        }
        for (b, z) in branches.iter_mut().zip(assigned) {
            b.push(z);
        }
    }
    branches
}
