use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Square Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Validates Hermitian symmetry within [`Tolerances::hermitian`].
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(dim, data, Tolerances::default().hermitian)
    }

    pub fn with_tolerance(dim: usize, data: Vec<Complex64>, tol: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for r in 0..dim {
            for c in r..dim {
                let dev = (data[r * dim + c] - data[c * dim + r].conj()).norm();
                if dev > tol * scale || !dev.is_finite() {
                    return Err(Error::NotHermitian {
                        row: r,
                        col: c,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(Self::symmetrized(dim, data))
    }

    /// Replaces `A` by `(A + A^H) / 2`; used internally where symmetry holds up
    /// to rounding by construction.
    pub(crate) fn symmetrized(dim: usize, mut data: Vec<Complex64>) -> Self {
        for r in 0..dim {
            data[r * dim + r].im = 0.0;
            for c in r + 1..dim {
                let avg = (data[r * dim + c] + data[c * dim + r].conj()) * 0.5;
                data[r * dim + c] = avg;
                data[c * dim + r] = avg.conj();
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(s, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `h h^H`.
    pub fn outer(h: &[Complex64]) -> Self {
        let n = h.len();
        let mut data = Vec::with_capacity(n * n);
        for a in h {
            for b in h {
                data.push(a * b.conj());
            }
        }
        Self::symmetrized(n, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// `h^H A h`, real for Hermitian `A`.
    pub fn quad_form(&self, h: &[Complex64]) -> f64 {
        assert_eq!(h.len(), self.dim, "quad_form dimension mismatch");
        let mut acc = 0.0;
        for (r, hr) in h.iter().enumerate() {
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            let s: Complex64 = row.iter().zip(h).map(|(a, x)| a * x).sum();
            acc += (hr.conj() * s).re;
        }
        acc
    }

    /// `Re Tr(A B)`; for Hermitian operands the trace is already real.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "trace_product dimension mismatch");
        // Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &HermitianMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b * s)
            .collect();
        Self {
            dim: self.dim,
            data,
        }
    }

    /// `self += s * v v^H`.
    pub fn add_outer(&mut self, s: f64, v: &[Complex64]) {
        assert_eq!(v.len(), self.dim);
        for (r, vr) in v.iter().enumerate() {
            let a = vr * s;
            let row = &mut self.data[r * self.dim..(r + 1) * self.dim];
            for (x, vc) in row.iter_mut().zip(v) {
                *x += a * vc.conj();
            }
        }
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// General dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// `A^H h`.
    pub fn adjoint_mul_vec(&self, h: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(h.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (row, hr) in self.data.chunks_exact(self.cols).zip(h) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * hr;
            }
        }
        out
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    /// `A A^H`.
    pub fn gram(&self) -> HermitianMatrix {
        let n = self.rows;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            let ar = &self.data[r * self.cols..(r + 1) * self.cols];
            for c in r..n {
                let ac = &self.data[c * self.cols..(c + 1) * self.cols];
                let s: Complex64 = ar.iter().zip(ac).map(|(x, y)| x * y.conj()).sum();
                data[r * n + c] = s;
                data[c * n + r] = s.conj();
            }
        }
        HermitianMatrix::symmetrized(n, data)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}
