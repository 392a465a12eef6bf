use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DriveParams, QuantumSystem};
use crate::numerics::{kron, ComplexMatrix};

/// Vectorized Liouvillian acting on row-major `vec(ρ)`:
/// `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub matrix: ComplexMatrix,
    /// Hilbert-space dimension.
    pub d: usize,
    /// Drive the superoperator was built at.
    pub drive: DriveParams,
}

impl Superoperator {
    /// `d² × d²` matrix for a raw Liouvillian, e.g. one assembled by hand.
    pub fn from_matrix(matrix: ComplexMatrix, drive: DriveParams) -> Result<Self> {
        matrix.ensure_square()?;
        let n = matrix.rows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::DimensionMismatch {
                expected: (d * d, d * d),
                found: (n, n),
            });
        }
        Ok(Self { matrix, d, drive })
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.d || rho.cols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: (self.d, self.d),
                found: (rho.rows(), rho.cols()),
            });
        }
        ComplexMatrix::unvectorize(&self.matrix.matvec(&rho.vectorize()), self.d)
    }

    /// Largest `|Σ_k L[(k,k), c]|` over columns; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let n = self.matrix.cols();
        (0..n)
            .map(|c| {
                (0..self.d)
                    .map(|k| self.matrix[(k * self.d + k, c)])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }
}

/// `𝓛 = −i(H⊗I − I⊗Hᵀ) + Σ_k [L_k⊗L_k* − ½ L_k†L_k⊗I − ½ I⊗L_kᵀL_k*]`.
pub fn build_superoperator(system: &QuantumSystem) -> Superoperator {
    let d = system.d();
    let id = ComplexMatrix::identity(d);
    let h = system.hamiltonian();
    let minus_i = Complex64::new(0.0, -1.0);

    let mut l = (&kron(&h, &id) - &kron(&id, &h.transpose())).scale(minus_i);
    for op in system.jump_operators() {
        let lk = &op.matrix;
        let ldl = &lk.adjoint() * lk;
        l += &kron(lk, &lk.conj());
        l += &kron(&ldl, &id).scale_real(-0.5);
        l += &kron(&id, &ldl.transpose()).scale_real(-0.5);
    }
    Superoperator {
        matrix: l,
        d,
        drive: system.drive,
    }
}
