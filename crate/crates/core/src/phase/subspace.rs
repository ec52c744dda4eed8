//! Gram matrices of the form `W = a I + Q C Q^H`.
//!
//! `Q` holds an orthonormal basis of `span{h_strong, h_weak}`, plus one
//! direction orthogonal to both whenever `K` exceeds that span. The gradient
//! of the phase objective is a combination of `h_s h_s^H` and `h_w h_w^H`,
//! so every Frank-Wolfe vertex lies in `range(Q)` and the iterates never
//! leave this family.

use num_complex::Complex64;

use crate::numerics::{hermitian_eig, inner, norm_sqr, ComplexMatrix, HermitianMatrix};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    dim: usize,
    basis: Vec<Vec<Complex64>>,
    strong: Vec<Complex64>,
    weak: Vec<Complex64>,
}

const RANK_EPS: f64 = 1e-12;

fn orthogonalize(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let p = inner(q, v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= p * y;
            }
        }
    }
}

impl Subspace {
    pub fn new(h_strong: &[Complex64], h_weak: &[Complex64]) -> Self {
        let dim = h_strong.len();
        assert_eq!(dim, h_weak.len(), "channel lengths differ");
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(3);
        for h in [h_strong, h_weak] {
            let scale = norm_sqr(h).sqrt();
            if scale == 0.0 {
                continue;
            }
            let mut v = h.to_vec();
            orthogonalize(&mut v, &basis);
            let n = norm_sqr(&v).sqrt();
            if n > RANK_EPS * scale {
                basis.push(v.iter().map(|z| z / n).collect());
            }
        }
        if basis.len() < dim {
            // the unit vector with the largest component outside the span
            let mut best: Option<(f64, Vec<Complex64>)> = None;
            for k in 0..dim {
                let mut e = vec![Complex64::new(0.0, 0.0); dim];
                e[k] = Complex64::new(1.0, 0.0);
                orthogonalize(&mut e, &basis);
                let n = norm_sqr(&e).sqrt();
                if best.as_ref().is_none_or(|(b, _)| n > *b + 1e-12) {
                    best = Some((n, e));
                }
            }
            let (n, e) = best.expect("dim > 0");
            basis.push(e.iter().map(|z| z / n).collect());
        }
        let strong = basis.iter().map(|q| inner(q, h_strong)).collect();
        let weak = basis.iter().map(|q| inner(q, h_weak)).collect();
        Self {
            dim,
            basis,
            strong,
            weak,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    /// Coordinates `Q^H h_strong`.
    pub fn strong_coords(&self) -> &[Complex64] {
        &self.strong
    }

    pub fn weak_coords(&self) -> &[Complex64] {
        &self.weak
    }

    /// `Q m`.
    pub fn lift(&self, m: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (q, c) in self.basis.iter().zip(m) {
            for (o, x) in out.iter_mut().zip(q) {
                *o += x * c;
            }
        }
        out
    }

    /// `K - rank` orthonormal vectors completing `Q` to a unitary basis,
    /// from Householder reflections of `Q`.
    pub fn complement(&self) -> Vec<Vec<Complex64>> {
        let (n, r) = (self.dim, self.rank());
        // Householder QR of the n x r matrix Q; reflectors stored as vectors
        let mut a: Vec<Vec<Complex64>> = self.basis.clone();
        let mut reflectors: Vec<(usize, Vec<Complex64>)> = Vec::with_capacity(r);
        for j in 0..r {
            let x: Vec<Complex64> = a[j][j..].to_vec();
            let nx = norm_sqr(&x).sqrt();
            let phase = if x[0].norm() > 0.0 {
                x[0] / x[0].norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let mut v = x;
            v[0] += phase * nx;
            let vv = norm_sqr(&v);
            if vv > 0.0 {
                for col in a.iter_mut().skip(j) {
                    let seg = &mut col[j..];
                    let p = inner(&v, seg) * (2.0 / vv);
                    for (s, vi) in seg.iter_mut().zip(&v) {
                        *s -= vi * p;
                    }
                }
            }
            reflectors.push((j, v));
        }
        (r..n)
            .map(|k| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[k] = Complex64::new(1.0, 0.0);
                for (j, v) in reflectors.iter().rev() {
                    let vv = norm_sqr(v);
                    if vv == 0.0 {
                        continue;
                    }
                    let seg = &mut e[*j..];
                    let p = inner(v, seg) * (2.0 / vv);
                    for (s, vi) in seg.iter_mut().zip(v) {
                        *s -= vi * p;
                    }
                }
                e
            })
            .collect()
    }
}

/// Eigenvalue and lifted unit eigenvector.
pub type Eigenpair = (f64, Vec<Complex64>);

/// `W = identity_weight * I + Q core Q^H` relative to a [`Subspace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredGram {
    pub identity_weight: f64,
    pub core: HermitianMatrix,
}

impl FactoredGram {
    /// `(K / dim) I` with `K = dim`, i.e. the identity.
    pub fn identity(space: &Subspace) -> Self {
        Self {
            identity_weight: 1.0,
            core: HermitianMatrix::zeros(space.rank()),
        }
    }

    pub fn trace(&self, space: &Subspace) -> f64 {
        self.identity_weight * space.dim() as f64 + self.core.trace()
    }

    /// `(h_s^H W h_s, h_w^H W h_w)`.
    pub fn gains(&self, space: &Subspace) -> (f64, f64) {
        let g = |coords: &[Complex64]| {
            let full: f64 = norm_sqr(coords);
            self.identity_weight * full + self.core.quad_form(coords)
        };
        (g(space.strong_coords()), g(space.weak_coords()))
    }

    pub fn to_dense(&self, space: &Subspace) -> HermitianMatrix {
        let n = space.dim();
        let r = space.rank();
        // Q C (n x r)
        let mut qc = vec![Complex64::new(0.0, 0.0); n * r];
        for (i, q) in space.basis().iter().enumerate() {
            for j in 0..r {
                let cij = self.core.get(i, j);
                if cij == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for row in 0..n {
                    qc[row * r + j] += q[row] * cij;
                }
            }
        }
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for row in 0..n {
            for col in row..n {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, q) in space.basis().iter().enumerate() {
                    s += qc[row * r + j] * q[col].conj();
                }
                if row == col {
                    s += self.identity_weight;
                }
                data[row * n + col] = s;
                data[col * n + row] = s.conj();
            }
        }
        HermitianMatrix::symmetrized(n, data)
    }

    /// Eigenpairs in descending order: the `rank` pairs carried by `Q`
    /// followed by `identity_weight` on the complement, whose vectors are
    /// not materialized.
    pub fn spectrum(&self, space: &Subspace) -> Result<(Vec<Eigenpair>, f64)> {
        let e = hermitian_eig(&self.core)?;
        let pairs = (0..e.dim())
            .map(|k| {
                (
                    e.eigenvalues[k] + self.identity_weight,
                    space.lift(&e.vector(k)),
                )
            })
            .collect();
        Ok((pairs, self.identity_weight))
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, space: &Subspace, threshold: f64) -> Result<usize> {
        let (pairs, rest) = self.spectrum(space)?;
        let inside = pairs.iter().filter(|(l, _)| *l > threshold).count();
        let outside = if rest > threshold {
            space.dim() - space.rank()
        } else {
            0
        };
        Ok(inside + outside)
    }

    /// `Phi = U diag(sqrt(Sigma))` with columns in descending eigenvalue order.
    pub fn full_phase(&self, space: &Subspace) -> Result<ComplexMatrix> {
        let n = space.dim();
        let (pairs, rest) = self.spectrum(space)?;
        let mut phi = ComplexMatrix::zeros(n, n);
        let mut col = 0;
        for (l, v) in &pairs {
            let s = l.max(0.0).sqrt();
            for (row, z) in v.iter().enumerate() {
                phi.set(row, col, z * s);
            }
            col += 1;
        }
        if rest > 0.0 {
            let s = rest.sqrt();
            for v in space.complement() {
                for (row, z) in v.iter().enumerate() {
                    phi.set(row, col, z * s);
                }
                col += 1;
            }
        }
        Ok(phi)
    }
}
