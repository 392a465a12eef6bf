//! Vectorized Liouvillian, spectra, steady states and exceptional points.
//!
//! Density matrices are vectorized row by row, so `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`
//! and index `(i, j)` of `ρ` maps to `i·d + j`.

mod analytic;
mod ep_scan;
mod spectrum;
mod superop;

pub use analytic::{analytic_qubit_eigensystem, qubit_ep_coupling, qutrit_coherence_ep_coupling, AnalyticEigenpair};
pub use ep_scan::{
    ep_scan, ep_scan_with, Ep3Point, EpLine, EpMap, EpPoint, EpScanOptions, GridSummary, ScanAxis, ScanGrid,
};
pub use spectrum::{
    characteristic_polynomial, real_eigenvalue_count, spectrum, spectrum_with, steady_state, track_branches,
    EpTolerances, SpectralResult, STEADY_STATE_TOL,
};
pub use superop::{build_superoperator, Superoperator};
