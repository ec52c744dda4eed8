//! Power allocation for a fixed surface configuration.
//!
//! With the weak user's fraction tied to `p_weak = s - p_strong`
//! (`s = min(1, P_max / P_t)`) the surrogate sum rate has exactly one
//! stationary point in `(0, s)` and tends to `-inf` at both ends, so the
//! optimum is that point clamped into the QoS interval. The multipliers of
//! the active constraints are then recovered from the stationarity
//! conditions, and the closed-form root expression reproduces the split from
//! those multipliers.

use serde::{Deserialize, Serialize};

use super::{rates, sinr_pair, surrogate_sum, PowerSplit, QosSpec, ScaCoefficients};
use crate::error::{Error, Result};

/// Multipliers of the QoS constraints (`lambda_*`), the fraction budget
/// `p_s + p_w <= 1` (`mu1`) and the radiated-power cap (`mu2`).
///
/// All are non-negative; the closed form maps them onto the sign convention
/// of its Lagrangian internally.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualState {
    pub lambda_strong: f64,
    pub lambda_weak: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl DualState {
    pub fn is_valid(&self) -> bool {
        [self.lambda_strong, self.lambda_weak, self.mu1, self.mu2]
            .iter()
            .all(|m| *m >= 0.0)
    }
}

/// Constraint violations, positive when violated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `R_min - R_strong`.
    pub qos_strong: f64,
    /// `R_min - R_weak`.
    pub qos_weak: f64,
    /// `p_s + p_w - 1`.
    pub fraction_budget: f64,
    /// `P_t (p_s + p_w) - P_max`.
    pub power_budget: f64,
}

impl ConstraintResiduals {
    /// Largest complementary-slackness product `|multiplier * residual|`.
    pub fn max_slackness_product(&self, duals: &DualState) -> f64 {
        [
            duals.lambda_strong * self.qos_strong,
            duals.lambda_weak * self.qos_weak,
            duals.mu1 * self.fraction_budget,
            duals.mu2 * self.power_budget,
        ]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
    }

    pub fn max_violation(&self) -> f64 {
        [
            self.qos_strong,
            self.qos_weak,
            self.fraction_budget,
            self.power_budget,
        ]
        .iter()
        .fold(0.0, |m, x| f64::max(m, *x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormIssue {
    /// `Lambda < 0`: no real stationary point for these multipliers.
    NegativeDiscriminant(f64),
    /// `mu2 P_t - mu1 = 0` (in the closed form's sign convention).
    DegenerateMultipliers,
}

impl std::fmt::Display for ClosedFormIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClosedFormIssue::NegativeDiscriminant(d) => write!(f, "negative discriminant {d:e}"),
            ClosedFormIssue::DegenerateMultipliers => {
                write!(f, "degenerate multipliers (zero denominator)")
            }
        }
    }
}

/// Both roots of
/// `p = (A a - B a - c sigma2 +- sqrt(Lambda)) / (2 a c)`,
/// `Lambda = (A a - B a - c sigma2)^2 + 4 A c a sigma2`,
/// where `A`, `B` are the multiplier-weighted surrogate slopes, `c` the
/// budget multiplier and `a = Psi_weak P_t`.
pub fn stationary_roots(
    slope_strong: f64,
    slope_weak: f64,
    budget_mult: f64,
    weak_gain_power: f64,
    sigma2: f64,
) -> std::result::Result<(f64, f64), ClosedFormIssue> {
    let (a_s, b_w, c, a) = (slope_strong, slope_weak, budget_mult, weak_gain_power);
    let den = 2.0 * a * c;
    if den == 0.0 || !den.is_finite() {
        return Err(ClosedFormIssue::DegenerateMultipliers);
    }
    let lin = a_s * a - b_w * a - c * sigma2;
    let disc = lin * lin + 4.0 * a_s * c * a * sigma2;
    if disc < 0.0 {
        return Err(ClosedFormIssue::NegativeDiscriminant(disc));
    }
    let sq = disc.sqrt();
    // q/den and (product of roots)/(q/den), algebraically the +- pair
    let q = if lin >= 0.0 { lin + sq } else { lin - sq };
    if q == 0.0 {
        return Ok((0.0, 0.0));
    }
    let r1 = q / den;
    let product = -(a_s * sigma2) / (c * a);
    Ok((r1, product / r1))
}

fn split_at(p_strong: f64, budget: f64, pt: f64, pmax: f64) -> PowerSplit {
    PowerSplit {
        p_strong,
        p_weak: (budget - p_strong).max(0.0),
        total_power_w: pt,
        max_power_w: pmax,
    }
}

/// Strong-user fraction from the stationarity condition of the Lagrangian at
/// the given multipliers; the weak user receives the rest of the budget.
///
/// Both roots are evaluated; among those inside `[0, s]` the one with the
/// larger surrogate wins, otherwise the nearer root is clipped.
pub fn power_closed_form(
    psi_strong: f64,
    psi_weak: f64,
    duals: &DualState,
    sca: &ScaCoefficients,
    qos: &QosSpec,
    total_power_w: f64,
    max_power_w: f64,
) -> std::result::Result<PowerSplit, ClosedFormIssue> {
    let pt = total_power_w;
    let s = PowerSplit::budget(pt, max_power_w);
    let slope_strong = sca.strong.alpha * (1.0 + duals.lambda_strong);
    let slope_weak = sca.weak.alpha * (1.0 + duals.lambda_weak);
    let c = duals.mu1 + duals.mu2 * pt;
    let (r1, r2) = stationary_roots(slope_strong, slope_weak, c, psi_weak * pt, qos.sigma2)?;

    let value = |p: f64| {
        surrogate_sum(
            psi_strong,
            psi_weak,
            &split_at(p, s, pt, max_power_w),
            sca,
            qos,
        )
    };
    let inside: Vec<f64> = [r1, r2]
        .into_iter()
        .filter(|r| (0.0..=s).contains(r))
        .collect();
    let p = match inside.as_slice() {
        [only] => *only,
        [x, y] => {
            if value(*y) > value(*x) {
                *y
            } else {
                *x
            }
        }
        _ => {
            let dist = |r: f64| if r < 0.0 { -r } else { r - s };
            let nearer = if dist(r1) <= dist(r2) { r1 } else { r2 };
            nearer.clamp(0.0, s)
        }
    };
    Ok(split_at(p, s, pt, max_power_w))
}

/// Strong-user fractions for which both true rates meet `R_min`, or `None`.
pub fn qos_interval(
    psi_strong: f64,
    psi_weak: f64,
    qos: &QosSpec,
    total_power_w: f64,
    max_power_w: f64,
) -> Option<(f64, f64)> {
    let s = PowerSplit::budget(total_power_w, max_power_w);
    let tau = qos.sinr_threshold();
    if tau == 0.0 {
        return Some((0.0, s));
    }
    let (as_, aw) = (psi_strong * total_power_w, psi_weak * total_power_w);
    if as_ <= 0.0 || aw <= 0.0 {
        return None;
    }
    let lo = tau * qos.sigma2 / as_;
    let hi = (aw * s - tau * qos.sigma2) / (aw * (1.0 + tau));
    let (lo, hi) = (lo.max(0.0), hi.min(s));
    (lo <= hi).then_some((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOutcome {
    pub split: PowerSplit,
    pub duals: DualState,
    /// Whether both true rates can meet `R_min` at all.
    pub feasible: bool,
    pub surrogate: f64,
    /// Dual-ascent iterations (zero for the exact route).
    pub iterations: usize,
    pub converged: bool,
}

fn residuals_at(
    psi_strong: f64,
    psi_weak: f64,
    split: &PowerSplit,
    qos: &QosSpec,
) -> ConstraintResiduals {
    let (gs, gw) = sinr_pair(psi_strong, psi_weak, split, qos);
    let (rs, rw) = rates(gs, gw);
    ConstraintResiduals {
        qos_strong: qos.r_min_bps_hz - rs,
        qos_weak: qos.r_min_bps_hz - rw,
        fraction_budget: split.sum() - 1.0,
        power_budget: split.total_power_w * split.sum() - split.max_power_w,
    }
}

/// Unique maximizer of the surrogate over `(0, s)` with `p_weak = s - p_strong`.
fn unconstrained_optimum(slope_strong: f64, slope_weak: f64, a: f64, sigma2: f64, s: f64) -> f64 {
    if slope_strong <= 0.0 {
        return 0.0;
    }
    if slope_weak <= 0.0 {
        return s;
    }
    let (aa, bb) = (slope_strong, slope_weak);
    if a <= 0.0 {
        return aa * s / (aa + bb);
    }
    // -A a p^2 + (A a s - A sigma2 - B a s - B sigma2) p + A sigma2 s = 0
    let qa = -aa * a;
    let qb = aa * a * s - aa * sigma2 - bb * a * s - bb * sigma2;
    let qc = aa * sigma2 * s;
    let d = (qb * qb - 4.0 * qa * qc).sqrt();
    if qb >= 0.0 {
        (-qb - d) / (2.0 * qa)
    } else {
        2.0 * qc / (-qb + d)
    }
}

fn place_budget_multiplier(c: f64, pt: f64, pmax: f64) -> (f64, f64) {
    if pmax < pt {
        (0.0, c / pt)
    } else {
        (c, 0.0)
    }
}

/// Exact KKT solution: clamp the stationary point into the QoS interval,
/// recover the multipliers of whichever constraints are active and evaluate
/// the closed form at them.
pub fn allocate_power(
    psi_strong: f64,
    psi_weak: f64,
    sca: &ScaCoefficients,
    qos: &QosSpec,
    total_power_w: f64,
    max_power_w: f64,
) -> Result<PowerOutcome> {
    if !(total_power_w > 0.0) || !(max_power_w > 0.0) {
        return Err(Error::Domain("transmit powers must be positive".into()));
    }
    let pt = total_power_w;
    let s = PowerSplit::budget(pt, max_power_w);
    let a = psi_weak * pt;
    let sigma2 = qos.sigma2;
    let (al_s, al_w) = (sca.strong.alpha, sca.weak.alpha);
    let p_star = unconstrained_optimum(al_s, al_w, a, sigma2, s);

    let Some((lo, hi)) = qos_interval(psi_strong, psi_weak, qos, pt, max_power_w) else {
        let split = split_at(p_star.clamp(0.0, s), s, pt, max_power_w);
        return Ok(PowerOutcome {
            split,
            duals: DualState::default(),
            feasible: false,
            surrogate: surrogate_sum(psi_strong, psi_weak, &split, sca, qos),
            iterations: 0,
            converged: true,
        });
    };
    let p = p_star.clamp(lo, hi);

    // multiplier recovery from the stationarity conditions
    let mut duals = DualState::default();
    let interior = 0.0 < p && p < s && al_s > 0.0 && al_w > 0.0;
    if interior {
        let interference = a / (sigma2 + a * p);
        let c;
        if p > p_star {
            // strong-user QoS active
            c = al_w / (s - p);
            duals.lambda_strong = (p * (al_w * interference + c) / al_s - 1.0).max(0.0);
        } else if p < p_star {
            // weak-user QoS active
            let slope_weak = (al_s / p) / (interference + 1.0 / (s - p));
            duals.lambda_weak = (slope_weak / al_w - 1.0).max(0.0);
            c = slope_weak / (s - p);
        } else {
            c = al_w / (s - p);
        }
        (duals.mu1, duals.mu2) = place_budget_multiplier(c, pt, max_power_w);
    }

    let split = if interior {
        match power_closed_form(psi_strong, psi_weak, &duals, sca, qos, pt, max_power_w) {
            Ok(cf) if (cf.p_strong - p).abs() <= 1e-9 * p.max(1e-3) => cf,
            _ => split_at(p, s, pt, max_power_w),
        }
    } else {
        split_at(p, s, pt, max_power_w)
    };
    Ok(PowerOutcome {
        split,
        duals,
        feasible: true,
        surrogate: surrogate_sum(psi_strong, psi_weak, &split, sca, qos),
        iterations: 0,
        converged: true,
    })
}

/// Projected subgradient ascent step: `m <- max(0, m + step * violation)`.
pub fn dual_update(duals: &DualState, violations: &ConstraintResiduals, step: f64) -> DualState {
    let up = |m: f64, v: f64| (m + step * v).max(0.0);
    DualState {
        lambda_strong: up(duals.lambda_strong, violations.qos_strong),
        lambda_weak: up(duals.lambda_weak, violations.qos_weak),
        mu1: up(duals.mu1, violations.fraction_budget),
        mu2: up(duals.mu2, violations.power_budget),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualAscentConfig {
    pub step0: f64,
    pub max_iters: usize,
    pub slackness_tol: f64,
    pub initial_mu1: f64,
}

impl Default for DualAscentConfig {
    fn default() -> Self {
        Self {
            step0: 0.1,
            max_iters: 500,
            slackness_tol: 1e-6,
            initial_mu1: 1.0,
        }
    }
}

/// Multiplier search by projected subgradient ascent with step
/// `step0 / sqrt(t)`.
///
/// For fixed multipliers the Lagrangian is maximized by the closed-form
/// strong-user fraction and `p_weak = alpha_w (1 + lambda_w) / (mu1 + mu2 P_t)`.
/// The final iterate is mapped back onto the budget and the QoS interval.
pub fn dual_ascent(
    psi_strong: f64,
    psi_weak: f64,
    sca: &ScaCoefficients,
    qos: &QosSpec,
    total_power_w: f64,
    max_power_w: f64,
    cfg: &DualAscentConfig,
) -> Result<PowerOutcome> {
    if !(cfg.step0 > 0.0) {
        return Err(Error::config("dual ascent step must be positive"));
    }
    let pt = total_power_w;
    let s = PowerSplit::budget(pt, max_power_w);
    let mut duals = DualState {
        mu1: cfg.initial_mu1,
        ..DualState::default()
    };
    let mut iterations = 0;
    let mut converged = false;
    let mut last_p = 0.5 * s;

    for t in 1..=cfg.max_iters {
        iterations = t;
        let p_strong =
            match power_closed_form(psi_strong, psi_weak, &duals, sca, qos, pt, max_power_w) {
                Ok(split) => split.p_strong,
                Err(_) => s,
            };
        let c = duals.mu1 + duals.mu2 * pt;
        let p_weak = if c > 0.0 {
            (sca.weak.alpha * (1.0 + duals.lambda_weak) / c).min(1.0)
        } else {
            1.0
        };
        last_p = p_strong;
        let primal = PowerSplit {
            p_strong,
            p_weak,
            total_power_w: pt,
            max_power_w,
        };
        let res = residuals_at(psi_strong, psi_weak, &primal, qos);
        if res.max_violation() <= cfg.slackness_tol
            && res.max_slackness_product(&duals) <= cfg.slackness_tol
        {
            converged = true;
            break;
        }
        duals = dual_update(&duals, &res, cfg.step0 / (t as f64).sqrt());
    }

    let interval = qos_interval(psi_strong, psi_weak, qos, pt, max_power_w);
    let p = match interval {
        Some((lo, hi)) => last_p.clamp(lo, hi),
        None => last_p.clamp(0.0, s),
    };
    let split = split_at(p, s, pt, max_power_w);
    Ok(PowerOutcome {
        split,
        duals,
        feasible: interval.is_some(),
        surrogate: surrogate_sum(psi_strong, psi_weak, &split, sca, qos),
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Feasible { split: PowerSplit, surrogate: f64 },
    Infeasible,
}

impl OracleOutcome {
    pub fn split(&self) -> Option<PowerSplit> {
        match self {
            OracleOutcome::Feasible { split, .. } => Some(*split),
            OracleOutcome::Infeasible => None,
        }
    }
}

/// Exhaustive scan of `p_strong` over `grid_points` uniform points of
/// `[0, s]`, keeping the best surrogate among points where both true rates
/// meet `R_min`.
pub fn power_oracle(
    psi_strong: f64,
    psi_weak: f64,
    sca: &ScaCoefficients,
    qos: &QosSpec,
    total_power_w: f64,
    max_power_w: f64,
    grid_points: usize,
) -> Result<OracleOutcome> {
    if grid_points < 1000 {
        return Err(Error::Domain(format!(
            "oracle needs at least 1000 grid points, got {grid_points}"
        )));
    }
    let s = PowerSplit::budget(total_power_w, max_power_w);
    let mut best: Option<(f64, PowerSplit)> = None;
    for k in 0..grid_points {
        let p = s * k as f64 / (grid_points - 1) as f64;
        let split = split_at(p, s, total_power_w, max_power_w);
        let (gs, gw) = sinr_pair(psi_strong, psi_weak, &split, qos);
        let (rs, rw) = rates(gs, gw);
        if rs < qos.r_min_bps_hz || rw < qos.r_min_bps_hz {
            continue;
        }
        let v = surrogate_sum(psi_strong, psi_weak, &split, sca, qos);
        if !v.is_finite() {
            continue;
        }
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, split));
        }
    }
    Ok(match best {
        Some((surrogate, split)) => OracleOutcome::Feasible { split, surrogate },
        None => OracleOutcome::Infeasible,
    })
}
