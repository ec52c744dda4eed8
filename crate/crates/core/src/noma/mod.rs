//! Two-user downlink NOMA: SINR and rate model, tangent log surrogates and
//! power allocation.
//!
//! The strong user decodes and cancels the weak user's signal; the weak user
//! treats the strong user's signal as noise.

mod power;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use power::{
    allocate_power, dual_ascent, dual_update, power_closed_form, power_oracle, qos_interval,
    stationary_roots, ClosedFormIssue, ConstraintResiduals, DualAscentConfig, DualState,
    OracleOutcome, PowerOutcome,
};

/// Power fractions of the two users on top of the satellite's power scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub p_strong: f64,
    pub p_weak: f64,
    pub total_power_w: f64,
    pub max_power_w: f64,
}

impl PowerSplit {
    /// Largest admissible `p_strong + p_weak`: `min(1, P_max / P_t)`.
    pub fn budget(total_power_w: f64, max_power_w: f64) -> f64 {
        (max_power_w / total_power_w).min(1.0)
    }

    pub fn sum(&self) -> f64 {
        self.p_strong + self.p_weak
    }

    pub fn validate(&self) -> Result<()> {
        let eps = 1e-12;
        if !(self.total_power_w > 0.0) || !(self.max_power_w > 0.0) {
            return Err(Error::Domain("transmit powers must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_strong) || !(0.0..=1.0).contains(&self.p_weak) {
            return Err(Error::Domain(format!(
                "power fractions must lie in [0, 1], got ({}, {})",
                self.p_strong, self.p_weak
            )));
        }
        if self.sum() > 1.0 + eps {
            return Err(Error::Domain(format!(
                "p_strong + p_weak = {} exceeds 1",
                self.sum()
            )));
        }
        if self.total_power_w * self.sum() > self.max_power_w * (1.0 + eps) {
            return Err(Error::Domain(format!(
                "radiated power {} W exceeds P_max = {} W",
                self.total_power_w * self.sum(),
                self.max_power_w
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosSpec {
    pub r_min_bps_hz: f64,
    pub sigma2: f64,
}

impl QosSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min_bps_hz >= 0.0) {
            return Err(Error::config("r_min must be non-negative"));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::config("noise variance sigma2 must be positive"));
        }
        Ok(())
    }

    /// SINR threshold `2^R_min - 1`.
    pub fn sinr_threshold(&self) -> f64 {
        self.r_min_bps_hz.exp2() - 1.0
    }
}

/// Tangent surrogate `alpha log2(gamma) + beta` of `log2(1 + gamma)` at
/// `expansion_sinr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaTerm {
    pub alpha: f64,
    pub beta: f64,
    pub expansion_sinr: f64,
}

impl ScaTerm {
    pub fn new(expansion_sinr: f64) -> Result<Self> {
        if !(expansion_sinr > 0.0) || !expansion_sinr.is_finite() {
            return Err(Error::Domain(format!(
                "SCA expansion point must be a positive SINR, got {expansion_sinr}"
            )));
        }
        let g = expansion_sinr;
        let alpha = g / (1.0 + g);
        let beta = g.ln_1p() / std::f64::consts::LN_2 - alpha * g.log2();
        Ok(Self {
            alpha,
            beta,
            expansion_sinr: g,
        })
    }

    /// A term that contributes nothing; used to switch a user off.
    pub fn disabled() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            expansion_sinr: 0.0,
        }
    }

    pub fn eval(&self, sinr: f64) -> f64 {
        if self.alpha == 0.0 {
            self.beta
        } else {
            self.alpha * sinr.log2() + self.beta
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaCoefficients {
    pub strong: ScaTerm,
    pub weak: ScaTerm,
}

pub fn sca_coefficients(sinr_strong: f64, sinr_weak: f64) -> Result<ScaCoefficients> {
    Ok(ScaCoefficients {
        strong: ScaTerm::new(sinr_strong)?,
        weak: ScaTerm::new(sinr_weak)?,
    })
}

/// Which of two devices is decoded with SIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserOrder {
    pub strong: usize,
    pub weak: usize,
}

/// Ties go to the first argument.
pub fn order_users(gain_a: f64, gain_b: f64) -> UserOrder {
    if gain_a >= gain_b {
        UserOrder { strong: 0, weak: 1 }
    } else {
        UserOrder { strong: 1, weak: 0 }
    }
}

/// `(gamma_strong, gamma_weak)` for effective gains `psi`.
pub fn sinr_pair(psi_strong: f64, psi_weak: f64, split: &PowerSplit, qos: &QosSpec) -> (f64, f64) {
    let pt = split.total_power_w;
    let strong = psi_strong * split.p_strong * pt / qos.sigma2;
    let weak = psi_weak * split.p_weak * pt / (qos.sigma2 + psi_weak * split.p_strong * pt);
    (strong, weak)
}

pub fn rates(sinr_strong: f64, sinr_weak: f64) -> (f64, f64) {
    let r = |g: f64| g.ln_1p() / std::f64::consts::LN_2;
    (r(sinr_strong), r(sinr_weak))
}

/// Surrogate sum `R_bar_strong + R_bar_weak`; `-inf` when a user gets no power.
pub fn surrogate_sum(
    psi_strong: f64,
    psi_weak: f64,
    split: &PowerSplit,
    sca: &ScaCoefficients,
    qos: &QosSpec,
) -> f64 {
    let (gs, gw) = sinr_pair(psi_strong, psi_weak, split, qos);
    sca.strong.eval(gs) + sca.weak.eval(gw)
}

/// True sum rate `R_strong + R_weak`.
pub fn sum_rate(psi_strong: f64, psi_weak: f64, split: &PowerSplit, qos: &QosSpec) -> f64 {
    let (gs, gw) = sinr_pair(psi_strong, psi_weak, split, qos);
    let (rs, rw) = rates(gs, gw);
    rs + rw
}
