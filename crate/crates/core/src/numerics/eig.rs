use num_complex::Complex64;

use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// `A = U diag(eigenvalues) U^H` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// Largest eigenvalue with its eigenvector.
    pub fn principal(&self) -> (f64, Vec<Complex64>) {
        (self.eigenvalues[0], self.vector(0))
    }

    /// `U diag(f(lambda)) U^H`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in r..n {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, w) in weights.iter().enumerate() {
                    if *w != 0.0 {
                        s += u.get(r, k) * u.get(c, k).conj() * *w;
                    }
                }
                data[r * n + c] = s;
                data[c * n + r] = s.conj();
            }
        }
        HermitianMatrix::symmetrized(n, data)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map_spectrum(|l| l)
    }
}

pub fn hermitian_eig(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    hermitian_eig_with(a, &Tolerances::default())
}

/// Cyclic complex Jacobi.
///
/// Each rotation zeroes one off-diagonal pair `(p, q)` using the unitary
/// `[[c, s e^{i phi}], [-s e^{-i phi}, c]]`, `phi = arg a_pq`, which reduces
/// the pair to the real symmetric case.
pub fn hermitian_eig_with(a: &HermitianMatrix, tol: &Tolerances) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();
    let target = tol.jacobi_offdiag * total;

    let off = |m: &[Complex64]| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                s += m[r * n + c].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    let mut residual = off(&m);
    while residual > target && total > 0.0 {
        if sweeps == tol.jacobi_max_sweeps {
            return Err(Error::EigNotConverged { sweeps, residual });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let mag = apq.norm();
                if mag == 0.0 || mag <= f64::EPSILON * 1e-3 * total {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let ph = apq / mag; // e^{i phi}
                let s_up = ph * sn; // s e^{i phi}
                let s_dn = ph.conj() * sn; // s e^{-i phi}

                // columns: A <- A U
                for r in 0..n {
                    let xp = m[r * n + p];
                    let xq = m[r * n + q];
                    m[r * n + p] = xp * cs - xq * s_dn;
                    m[r * n + q] = xp * s_up + xq * cs;
                }
                // rows: A <- U^H A
                for c in 0..n {
                    let xp = m[p * n + c];
                    let xq = m[q * n + c];
                    m[p * n + c] = xp * cs - xq * s_up;
                    m[q * n + c] = xp * s_dn + xq * cs;
                }
                m[p * n + q] = Complex64::new(0.0, 0.0);
                m[q * n + p] = Complex64::new(0.0, 0.0);
                m[p * n + p].im = 0.0;
                m[q * n + q].im = 0.0;

                for r in 0..n {
                    let xp = v.get(r, p);
                    let xq = v.get(r, q);
                    v.set(r, p, xp * cs - xq * s_dn);
                    v.set(r, q, xp * s_up + xq * cs);
                }
            }
        }
        sweeps += 1;
        residual = off(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y * n + y].re.total_cmp(&m[x * n + x].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k * n + k].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Nearest PSD matrix in Frobenius norm: `U max(Sigma, 0) U^H`.
pub fn psd_project(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(hermitian_eig(a)?.map_spectrum(|l| l.max(0.0)))
}
