//! Dense complex linear algebra: Hermitian storage, a cyclic Jacobi
//! eigensolver, PSD projection and Kronecker products.
//!
//! Matrices are stored row-major as contiguous [`Complex64`] values, i.e.
//! interleaved `(re, im)` pairs, so buffers can be handed between modules
//! without conversion.

mod eig;
mod matrix;

pub use eig::{hermitian_eig, hermitian_eig_with, psd_project, EigenDecomposition};
pub use matrix::{ComplexMatrix, HermitianMatrix};
pub use num_complex::Complex64;

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm.
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Kronecker product of two vectors: `out[m * b.len() + n] = a[m] * b[n]`.
pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_scalar() {
        assert_eq!(kron(&[c(1.0, 0.0)], &[c(1.0, 0.0)]), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn kron_definition() {
        let x = c(0.3, -1.2);
        let y = c(2.0, 0.5);
        let one = c(1.0, 0.0);
        assert_eq!(kron(&[one, x], &[one, y]), vec![one, y, x, x * y]);
    }

    #[test]
    fn kron_of_unit_modulus_factors_is_unit_modulus() {
        let ax: Vec<_> = (0..4)
            .map(|m| Complex64::from_polar(1.0, -0.7 * m as f64))
            .collect();
        let ay: Vec<_> = (0..4)
            .map(|n| Complex64::from_polar(1.0, 1.9 * n as f64))
            .collect();
        let v = kron(&ax, &ay);
        assert_eq!(v.len(), 16);
        for z in v {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let a = [c(0.0, 1.0), c(2.0, 0.0)];
        let b = [c(1.0, 0.0), c(1.0, 1.0)];
        assert_eq!(inner(&a, &b), c(0.0, -1.0) + c(2.0, 2.0));
        assert_eq!(norm_sqr(&a), 5.0);
    }
}
