//! Satellite-to-device channel synthesis for a planar transmissive surface.
//!
//! A device channel is `c * sqrt(g / d^alpha) * a(theta, phi) * e^{j pi psi}`
//! where `a = a_x (x) a_y` is the planar-array steering vector, `g` the
//! Rayleigh power gain (unit-mean exponential), `d` the slant range and `c`
//! a link-budget normalization shared by every device and sweep point.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{kron, norm_sqr};
use crate::phase::PhaseMatrix;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub k_x: usize,
    pub k_y: usize,
    pub element_spacing_m: f64,
    pub carrier_hz: f64,
}

impl ArrayGeometry {
    pub fn new(k_x: usize, k_y: usize, element_spacing_m: f64, carrier_hz: f64) -> Result<Self> {
        let g = Self {
            k_x,
            k_y,
            element_spacing_m,
            carrier_hz,
        };
        g.validate()?;
        Ok(g)
    }

    /// Element spacing of half a carrier wavelength.
    pub fn half_wavelength(k_x: usize, k_y: usize, carrier_hz: f64) -> Result<Self> {
        Self::new(k_x, k_y, SPEED_OF_LIGHT / (2.0 * carrier_hz), carrier_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_x == 0 || self.k_y == 0 {
            return Err(Error::config(
                "array needs at least one element per row and column",
            ));
        }
        if !(self.element_spacing_m > 0.0) || !(self.carrier_hz > 0.0) {
            return Err(Error::config(
                "element spacing and carrier frequency must be positive",
            ));
        }
        Ok(())
    }

    pub fn elements(&self) -> usize {
        self.k_x * self.k_y
    }

    /// `2 pi f_c d_0 / c`.
    pub fn rho(&self) -> f64 {
        2.0 * PI * self.carrier_hz * self.element_spacing_m / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
    pub doppler_cycles: f64,
    pub pathloss_exponent: f64,
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::config("link distance must be positive"));
        }
        if !(self.pathloss_exponent >= 0.0) {
            return Err(Error::config("path-loss exponent must be non-negative"));
        }
        Ok(())
    }

    /// `d^-alpha`.
    pub fn path_gain(&self) -> f64 {
        self.distance_m.powf(-self.pathloss_exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    /// Common modulus of every entry, `c sqrt(g / d^alpha)`.
    pub large_scale_gain: f64,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.entries)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }
}

/// `a_x (x) a_y` with `a_x[m] = exp(-j rho sin(theta) cos(phi) m)`.
pub fn steering_vector(geom: &ArrayGeometry, link: &LinkGeometry) -> Vec<Complex64> {
    let phase = geom.rho() * link.elevation_rad.sin() * link.azimuth_rad.cos();
    let factor = |n: usize| -> Vec<Complex64> {
        (0..n)
            .map(|m| Complex64::from_polar(1.0, -phase * m as f64))
            .collect()
    };
    kron(&factor(geom.k_x), &factor(geom.k_y))
}

/// Rayleigh power gain: squared magnitude of a unit-variance circular Gaussian.
pub fn draw_rayleigh_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    0.5 * (re * re + im * im)
}

/// Deterministic channel for a given small-scale gain `g`.
pub fn channel_with_gain(
    geom: &ArrayGeometry,
    link: &LinkGeometry,
    small_scale_gain: f64,
    normalization: f64,
) -> ChannelVector {
    let large_scale_gain = normalization * (small_scale_gain * link.path_gain()).sqrt();
    let doppler = Complex64::from_polar(1.0, PI * link.doppler_cycles);
    let entries = steering_vector(geom, link)
        .into_iter()
        .map(|a| a * doppler * large_scale_gain)
        .collect();
    ChannelVector {
        entries,
        large_scale_gain,
    }
}

/// Draws the Rayleigh gain from `rng` and builds the channel.
pub fn generate_channel<R: Rng + ?Sized>(
    geom: &ArrayGeometry,
    link: &LinkGeometry,
    normalization: f64,
    rng: &mut R,
) -> ChannelVector {
    let g = draw_rayleigh_gain(rng);
    channel_with_gain(geom, link, g, normalization)
}

/// Amplitude normalization such that a unit-gain device at `distance_m`
/// behind an identity surface of `elements` elements sees
/// `reference_snr_db` when given the full power `p_t_w`.
pub fn reference_normalization(
    reference_snr_db: f64,
    elements: usize,
    distance_m: f64,
    pathloss_exponent: f64,
    p_t_w: f64,
    sigma2: f64,
) -> f64 {
    let snr = 10f64.powf(reference_snr_db / 10.0);
    (snr * sigma2 * distance_m.powf(pathloss_exponent) / (elements as f64 * p_t_w)).sqrt()
}

/// `Tr(Phi^H h h^H Phi) = ||Phi^H h||^2`.
pub fn effective_gain(h: &ChannelVector, phi: &PhaseMatrix) -> Result<f64> {
    let m = phi.matrix();
    if m.rows() != h.len() {
        return Err(Error::Dimension {
            expected: m.rows(),
            actual: h.len(),
        });
    }
    Ok(norm_sqr(&m.adjoint_mul_vec(&h.entries)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ComplexMatrix, HermitianMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn link(theta: f64, phi: f64) -> LinkGeometry {
        LinkGeometry {
            distance_m: 1.0,
            elevation_rad: theta,
            azimuth_rad: phi,
            doppler_cycles: 0.0,
            pathloss_exponent: 0.0,
        }
    }

    #[test]
    fn single_element_steering() {
        let g = ArrayGeometry::half_wavelength(1, 1, 18e9).unwrap();
        assert_eq!(
            steering_vector(&g, &link(0.4, 1.0)),
            vec![Complex64::new(1.0, 0.0)]
        );
    }

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::half_wavelength(3, 4, 18e9).unwrap();
        let v = steering_vector(&g, &link(0.0, 2.0));
        assert_eq!(v.len(), 12);
        assert!(v
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn pi_phase_progression() {
        // half-wavelength spacing gives rho = pi; theta = pi/2, phi = 0 gives pi per element
        let g = ArrayGeometry::half_wavelength(2, 2, 18e9).unwrap();
        assert!((g.rho() - PI).abs() < 1e-12);
        let v = steering_vector(&g, &link(PI / 2.0, 0.0));
        let expect = [1.0, -1.0, -1.0, 1.0];
        for (z, e) in v.iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(ArrayGeometry::new(0, 2, 0.1, 1e9).is_err());
        assert!(ArrayGeometry::new(2, 2, 0.0, 1e9).is_err());
        assert!(LinkGeometry {
            distance_m: 0.0,
            ..link(0.0, 0.0)
        }
        .validate()
        .is_err());
        assert!(LinkGeometry {
            pathloss_exponent: -1.0,
            ..link(0.0, 0.0)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn same_seed_same_channel() {
        let g = ArrayGeometry::half_wavelength(4, 4, 18e9).unwrap();
        let l = link(0.3, 0.9);
        let a = generate_channel(&g, &l, 1.0, &mut ChaCha8Rng::seed_from_u64(11));
        let b = generate_channel(&g, &l, 1.0, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn unit_scaling_reproduces_steering_vector() {
        let g = ArrayGeometry::half_wavelength(3, 2, 18e9).unwrap();
        let l = link(0.7, 0.2);
        let h = channel_with_gain(&g, &l, 1.0, 1.0);
        assert_eq!(h.entries, steering_vector(&g, &l));
    }

    #[test]
    fn path_loss_scaling() {
        let g = ArrayGeometry::half_wavelength(4, 4, 18e9).unwrap();
        let l = LinkGeometry {
            distance_m: 2.0,
            pathloss_exponent: 2.0,
            ..link(0.5, 0.5)
        };
        let h = channel_with_gain(&g, &l, 1.0, 1.0);
        assert!((h.norm_sqr() - 16.0 / 4.0).abs() < 1e-12);
        assert!((h.large_scale_gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn doppler_leaves_moduli_unchanged() {
        let g = ArrayGeometry::half_wavelength(2, 3, 18e9).unwrap();
        let base = link(0.4, 1.1);
        let h0 = channel_with_gain(&g, &base, 0.8, 2.0);
        let h1 = channel_with_gain(
            &g,
            &LinkGeometry {
                doppler_cycles: 0.37,
                ..base
            },
            0.8,
            2.0,
        );
        for (a, b) in h0.entries.iter().zip(&h1.entries) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let w = HermitianMatrix::outer(&[Complex64::new(1.0, 0.0); 6]);
        assert!(
            (w.quad_form(&h0.entries) - w.quad_form(&h1.entries)).abs()
                < 1e-12 * w.quad_form(&h0.entries)
        );
    }

    #[test]
    fn rayleigh_gain_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 200_000;
        let mean = (0..n).map(|_| draw_rayleigh_gain(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn effective_gain_cases() {
        let g = ArrayGeometry::half_wavelength(2, 2, 18e9).unwrap();
        let h = channel_with_gain(&g, &link(0.3, 0.4), 1.7, 1.0);
        let k = h.len();
        let eye = PhaseMatrix::new(ComplexMatrix::identity(k));
        assert!((effective_gain(&h, &eye).unwrap() - h.norm_sqr()).abs() < 1e-12);

        // sqrt(K) u u^H with u = h / |h|
        let nrm = h.norm_sqr().sqrt();
        let u: Vec<Complex64> = h.entries.iter().map(|z| z / nrm).collect();
        let mut m = ComplexMatrix::zeros(k, k);
        for r in 0..k {
            for c in 0..k {
                m.set(r, c, u[r] * u[c].conj() * (k as f64).sqrt());
            }
        }
        let gain = effective_gain(&h, &PhaseMatrix::new(m)).unwrap();
        assert!((gain - k as f64 * h.norm_sqr()).abs() < 1e-10);

        let zero = ChannelVector {
            entries: vec![Complex64::new(0.0, 0.0); k],
            large_scale_gain: 0.0,
        };
        assert_eq!(effective_gain(&zero, &eye).unwrap(), 0.0);

        let short = ChannelVector {
            entries: vec![Complex64::new(1.0, 0.0); 3],
            large_scale_gain: 1.0,
        };
        assert!(matches!(
            effective_gain(&short, &eye),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn normalization_hits_reference_snr() {
        let c = reference_normalization(10.0, 64, 500e3, 2.0, 20.0, 1e-5);
        let g = ArrayGeometry::half_wavelength(8, 8, 18e9).unwrap();
        let l = LinkGeometry {
            distance_m: 500e3,
            pathloss_exponent: 2.0,
            ..link(0.2, 0.1)
        };
        let h = channel_with_gain(&g, &l, 1.0, c);
        let snr_db = 10.0 * (h.norm_sqr() * 20.0 / 1e-5).log10();
        assert!((snr_db - 10.0).abs() < 1e-9);
    }

    fn random_unitary(k: usize, seed: u64) -> ComplexMatrix {
        // Gram-Schmidt on a random complex matrix
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<Complex64>> = Vec::new();
        while cols.len() < k {
            let mut v: Vec<Complex64> = (0..k)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            for _ in 0..2 {
                for q in &cols {
                    let p = crate::numerics::inner(q, &v);
                    for (x, y) in v.iter_mut().zip(q) {
                        *x -= p * y;
                    }
                }
            }
            let n = norm_sqr(&v).sqrt();
            cols.push(v.iter().map(|z| z / n).collect());
        }
        let mut m = ComplexMatrix::zeros(k, k);
        for (c, col) in cols.iter().enumerate() {
            for (r, z) in col.iter().enumerate() {
                m.set(r, c, *z);
            }
        }
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn steering_entries_unit_modulus(
            kx in 1usize..9, ky in 1usize..9,
            theta in -1.6f64..1.6, phi in 0.0f64..6.3,
        ) {
            let g = ArrayGeometry::half_wavelength(kx, ky, 18e9).unwrap();
            for z in steering_vector(&g, &link(theta, phi)) {
                prop_assert!((z.norm() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn effective_gain_matches_trace_form(seed in 0u64..1000, k in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h: Vec<Complex64> = (0..k).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
            let m = ComplexMatrix::new(k, k, (0..k * k).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()).unwrap();
            let hv = ChannelVector { entries: h.clone(), large_scale_gain: 1.0 };
            let gain = effective_gain(&hv, &PhaseMatrix::new(m.clone())).unwrap();
            // Tr(Phi^H F Phi) = Tr(F Phi Phi^H)
            let tr = HermitianMatrix::outer(&h).trace_product(&m.gram());
            prop_assert!(gain >= 0.0);
            prop_assert!((gain - tr).abs() <= 1e-10 * tr.abs().max(1e-12));
        }

        #[test]
        fn unitary_surface_preserves_norm(seed in 0u64..1000, k in 1usize..10) {
            let u = random_unitary(k, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let h: Vec<Complex64> = (0..k).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
            let hv = ChannelVector { entries: h, large_scale_gain: 1.0 };
            let gain = effective_gain(&hv, &PhaseMatrix::new(u)).unwrap();
            prop_assert!((gain - hv.norm_sqr()).abs() <= 1e-9 * hv.norm_sqr());
        }
    }
}
