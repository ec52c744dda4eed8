use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{reference_normalization, ArrayGeometry};
use crate::error::{Error, Result};
use crate::noma::QosSpec;
use crate::optimizer::{AltConfig, PowerBudget};

/// Link and scenario parameters shared by every sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    pub altitude_m: f64,
    pub carrier_hz: f64,
    /// Metadata only; rates are reported in bits/s/Hz.
    pub bandwidth_hz: f64,
    pub sigma2: f64,
    pub r_min_bps_hz: f64,
    /// Identity-phase single-user SNR at full power for the nominal
    /// geometry (`k_x * k_y` elements, `p_t_w`, zenith, unit fading).
    pub reference_snr_db: f64,
    pub pathloss_exponent: f64,
    pub k_x: usize,
    pub k_y: usize,
    pub p_t_w: f64,
    pub p_max_w: f64,
    /// Elevation angles are drawn uniformly from `[-max, max]`.
    pub max_elevation_deg: f64,
    pub doppler_cycles: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            altitude_m: 500e3,
            carrier_hz: 18e9,
            bandwidth_hz: 20e6,
            sigma2: 1e-5,
            r_min_bps_hz: 0.0,
            reference_snr_db: -15.0,
            pathloss_exponent: 2.0,
            k_x: 8,
            k_y: 8,
            p_t_w: 20.0,
            p_max_w: 30.0,
            max_elevation_deg: 60.0,
            doppler_cycles: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("altitude_m", self.altitude_m),
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("sigma2", self.sigma2),
            ("p_t_w", self.p_t_w),
            ("p_max_w", self.p_max_w),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.r_min_bps_hz >= 0.0 && self.r_min_bps_hz.is_finite()) {
            return Err(Error::config(format!(
                "r_min_bps_hz must be >= 0, got {}",
                self.r_min_bps_hz
            )));
        }
        if !(self.pathloss_exponent >= 0.0) {
            return Err(Error::config("pathloss_exponent must be >= 0"));
        }
        if !self.reference_snr_db.is_finite() || !self.doppler_cycles.is_finite() {
            return Err(Error::config(
                "reference_snr_db and doppler_cycles must be finite",
            ));
        }
        if !(0.0..90.0).contains(&self.max_elevation_deg) {
            return Err(Error::config(format!(
                "max_elevation_deg must lie in [0, 90), got {}",
                self.max_elevation_deg
            )));
        }
        ArrayGeometry::half_wavelength(self.k_x, self.k_y, self.carrier_hz)?;
        Ok(())
    }

    pub fn elements(&self) -> usize {
        self.k_x * self.k_y
    }

    pub fn qos(&self) -> QosSpec {
        QosSpec {
            r_min_bps_hz: self.r_min_bps_hz,
            sigma2: self.sigma2,
        }
    }

    pub fn power(&self, total_w: f64) -> Result<PowerBudget> {
        PowerBudget::new(total_w, self.p_max_w)
    }

    /// Channel scale fixed at the nominal geometry, shared by all sweep points.
    pub fn normalization(&self) -> f64 {
        reference_normalization(
            self.reference_snr_db,
            self.elements(),
            self.altitude_m,
            self.pathloss_exponent,
            self.p_t_w,
            self.sigma2,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepValues {
    pub power_w: Vec<f64>,
    /// Element counts; each must be a perfect square `n * n`.
    pub elements: Vec<usize>,
}

impl Default for SweepValues {
    fn default() -> Self {
        Self {
            power_w: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            elements: vec![16, 36, 64, 100, 144],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Power,
    Elements,
}

impl SweepKind {
    pub fn experiment(self) -> &'static str {
        match self {
            SweepKind::Power => "power_sweep",
            SweepKind::Elements => "element_sweep",
        }
    }

    pub fn variable(self) -> &'static str {
        match self {
            SweepKind::Power => "p_t_w",
            SweepKind::Elements => "elements",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub physical: PhysicalParams,
    pub solver: AltConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub sweeps: SweepValues,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            physical: PhysicalParams::default(),
            solver: AltConfig::default(),
            trials: 500,
            master_seed: 2024,
            sweeps: SweepValues::default(),
        }
    }
}

pub fn integer_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("trials must be at least 1"));
        }
        self.physical.validate()?;
        self.solver.validate()?;
        let p = &self.sweeps.power_w;
        if p.is_empty() || p.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config(
                "sweeps.power_w must be a non-empty list of positive powers",
            ));
        }
        if p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("sweeps.power_w must be strictly increasing"));
        }
        let e = &self.sweeps.elements;
        if e.is_empty() {
            return Err(Error::config("sweeps.elements must not be empty"));
        }
        if e.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("sweeps.elements must be strictly increasing"));
        }
        if let Some(bad) = e.iter().find(|&&k| k == 0 || integer_sqrt(k).is_none()) {
            return Err(Error::config(format!(
                "sweeps.elements entry {bad} is not a square grid size"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            context: "config".into(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            context: path.display().to_string(),
            source: e,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
