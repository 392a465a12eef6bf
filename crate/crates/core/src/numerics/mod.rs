//! Dense complex linear algebra shared by every other module.

mod eig;
mod functions;
mod matrix;

pub use eig::{eig_general, eigenvalues, principal_angle, schur, EigenDecomposition, Schur};
pub use functions::{expm, hermitian_eigenvalues, trace_distance, EXPM_NORM_BOUND, HERMITIAN_TOL};
pub use matrix::{kron, ComplexMatrix};
