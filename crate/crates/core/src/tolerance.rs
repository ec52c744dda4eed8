//! Numeric tolerances shared by the kernels, the solvers and the test suites.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute Hermitian-symmetry tolerance, scaled by `max(1, max |a_ij|)`.
    pub hermitian: f64,
    /// Relative off-diagonal Frobenius norm at which the Jacobi sweep stops.
    pub jacobi_offdiag: f64,
    /// Sweep cap for the Jacobi eigensolver.
    pub jacobi_max_sweeps: usize,
    /// Smallest admissible eigenvalue of a Gram matrix.
    pub psd_floor: f64,
    /// Relative tolerance on `Tr(W) = K`.
    pub trace_rel: f64,
    /// Eigenvalues above this threshold count towards the reported rank.
    pub rank_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            jacobi_offdiag: 1e-15,
            jacobi_max_sweeps: 100,
            psd_floor: -1e-8,
            trace_rel: 1e-6,
            rank_threshold: 1e-6,
        }
    }
}
