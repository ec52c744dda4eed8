//! Alternating optimization of the power split and the surface phases, and
//! the fixed-split benchmark.
//!
//! Each outer iteration re-expands the log surrogates at the current point,
//! solves the power split with the phases fixed, re-expands, then redesigns
//! the phases with the split fixed. The optimized run starts from the
//! benchmark solution and keeps the best QoS-feasible iterate, so it never
//! reports less than the benchmark.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::noma::{
    allocate_power, dual_ascent, order_users, rates, sca_coefficients, sinr_pair, DualAscentConfig,
    PowerSplit, QosSpec, ScaCoefficients, UserOrder,
};
use crate::numerics::{ComplexMatrix, HermitianMatrix};
use crate::phase::{
    design_factored, outer_product, rank_one_candidate, FactoredGram, OuterProduct,
    PhaseDiagnostics, PhaseMatrix, SdrConfig, SdrProblem, Subspace,
};

/// Satellite transmit power and its hardware cap, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub total_w: f64,
    pub max_w: f64,
}

impl PowerBudget {
    pub fn new(total_w: f64, max_w: f64) -> Result<Self> {
        if !(total_w > 0.0 && total_w.is_finite()) || !(max_w > 0.0 && max_w.is_finite()) {
            return Err(Error::config(format!(
                "powers must be positive and finite, got P_t={total_w}, P_max={max_w}"
            )));
        }
        Ok(Self { total_w, max_w })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMethod {
    /// Stationary point clamped into the QoS interval, multipliers recovered exactly.
    #[default]
    Exact,
    /// Projected subgradient search over the multipliers.
    DualAscent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AltConfig {
    pub max_outer_iters: usize,
    /// Relative change of the true sum rate that ends the loop.
    pub outer_tol: f64,
    pub sdr: SdrConfig,
    /// Fixed `(p_strong, p_weak)` of the benchmark, also the optimizer's start.
    pub benchmark_split: (f64, f64),
    pub power_method: PowerMethod,
    pub dual_ascent: DualAscentConfig,
}

impl Default for AltConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            outer_tol: 1e-4,
            sdr: SdrConfig::default(),
            benchmark_split: (0.3, 0.7),
            power_method: PowerMethod::Exact,
            dual_ascent: DualAscentConfig::default(),
        }
    }
}

impl AltConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters < 1 {
            return Err(Error::config("max_outer_iters must be at least 1"));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::config("outer_tol must be positive"));
        }
        let (ps, pw) = self.benchmark_split;
        if !(ps > 0.0 && pw > 0.0) || ps + pw > 1.0 + 1e-12 {
            return Err(Error::config(format!(
                "benchmark_split ({ps}, {pw}) must be positive with p_strong + p_weak <= 1"
            )));
        }
        if self.sdr.max_iters < 1 || self.sdr.taylor_max_iters < 1 {
            return Err(Error::config(
                "phase solver iteration caps must be at least 1",
            ));
        }
        if !(self.sdr.gap_tol > 0.0) || !(self.sdr.taylor_tol > 0.0) {
            return Err(Error::config("phase solver tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `R_strong + R_weak` of the returned iterate; zero on outage.
    pub se_bps_hz: f64,
    pub rate_strong: f64,
    pub rate_weak: f64,
    pub split: PowerSplit,
    /// Which input (0 for `h_a`, 1 for `h_b`) is the strong user.
    pub order: UserOrder,
    /// Effective gains `||Phi^H h||^2`, strong then weak.
    pub gains: (f64, f64),
    /// Surrogate sum at the end of each outer iteration.
    pub surrogate_trace: Vec<f64>,
    /// True sum rate at the end of each outer iteration.
    pub se_trace: Vec<f64>,
    pub phase: PhaseDiagnostics,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Some rate misses `R_min` at the returned iterate.
    pub outage: bool,
}

/// A report together with the phase configuration that produced it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: SolveReport,
    space: Subspace,
    w: FactoredGram,
    rank_one: Option<Vec<Complex64>>,
}

impl Solution {
    /// The surface matrix, built on demand since it is `K x K`.
    pub fn phase_matrix(&self) -> Result<PhaseMatrix> {
        let k = self.space.dim();
        let m = match &self.rank_one {
            Some(u) => {
                let mut m = ComplexMatrix::zeros(k, k);
                let s = (k as f64).sqrt();
                for (row, z) in u.iter().enumerate() {
                    m.set(row, 0, z * s);
                }
                m
            }
            None => self.w.full_phase(&self.space)?,
        };
        Ok(PhaseMatrix::new(m))
    }

    pub fn gram(&self) -> HermitianMatrix {
        self.w.to_dense(&self.space)
    }
}

/// Benchmark and optimized solutions of one channel draw.
#[derive(Debug, Clone)]
pub struct TrialPair {
    pub benchmark: Solution,
    pub optimized: Solution,
}

struct Setup<'a> {
    order: UserOrder,
    f_strong: OuterProduct,
    f_weak: OuterProduct,
    space: Subspace,
    qos: &'a QosSpec,
    power: PowerBudget,
    cfg: &'a AltConfig,
}

#[derive(Debug, Clone)]
struct Iterate {
    w: FactoredGram,
    gains: (f64, f64),
    split: PowerSplit,
    se: f64,
    feasible: bool,
    diagnostics: Option<PhaseDiagnostics>,
}

impl<'a> Setup<'a> {
    fn new(
        h_a: &ChannelVector,
        h_b: &ChannelVector,
        qos: &'a QosSpec,
        power: PowerBudget,
        cfg: &'a AltConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        qos.validate()?;
        if h_a.len() != h_b.len() {
            return Err(Error::Dimension {
                expected: h_a.len(),
                actual: h_b.len(),
            });
        }
        let (na, nb) = (h_a.norm_sqr(), h_b.norm_sqr());
        if h_a.is_empty() || !(na > 0.0) || !(nb > 0.0) {
            return Err(Error::Domain("both channels must be nonzero".into()));
        }
        let order = order_users(na, nb);
        let (hs, hw) = if order.strong == 0 {
            (h_a, h_b)
        } else {
            (h_b, h_a)
        };
        Ok(Self {
            order,
            f_strong: outer_product(hs.as_slice()),
            f_weak: outer_product(hw.as_slice()),
            space: Subspace::new(hs.as_slice(), hw.as_slice()),
            qos,
            power,
            cfg,
        })
    }

    fn benchmark_split(&self) -> PowerSplit {
        let s = PowerSplit::budget(self.power.total_w, self.power.max_w);
        let (ps, pw) = self.cfg.benchmark_split;
        let scale = if ps + pw > s { s / (ps + pw) } else { 1.0 };
        PowerSplit {
            p_strong: ps * scale,
            p_weak: pw * scale,
            total_power_w: self.power.total_w,
            max_power_w: self.power.max_w,
        }
    }

    fn evaluate(&self, gains: (f64, f64), split: &PowerSplit) -> (f64, f64, bool) {
        let (gs, gw) = sinr_pair(gains.0, gains.1, split, self.qos);
        let (rs, rw) = rates(gs, gw);
        let r_min = self.qos.r_min_bps_hz;
        (rs, rw, rs >= r_min && rw >= r_min)
    }

    fn iterate(
        &self,
        w: FactoredGram,
        gains: (f64, f64),
        split: PowerSplit,
        diagnostics: Option<PhaseDiagnostics>,
    ) -> Iterate {
        let (rs, rw, feasible) = self.evaluate(gains, &split);
        Iterate {
            w,
            gains,
            split,
            se: rs + rw,
            feasible,
            diagnostics,
        }
    }

    fn sca(&self, gains: (f64, f64), split: &PowerSplit) -> Result<ScaCoefficients> {
        let (gs, gw) = sinr_pair(gains.0, gains.1, split, self.qos);
        sca_coefficients(gs, gw)
    }

    fn phase_step(&self, from: &Iterate, split: PowerSplit) -> Result<(Iterate, f64)> {
        let sca = self.sca(from.gains, &split)?;
        let problem = SdrProblem {
            f_strong: &self.f_strong,
            f_weak: &self.f_weak,
            split,
            sca,
            qos: *self.qos,
        };
        let sdr = SdrConfig {
            try_rank_one: false,
            ..self.cfg.sdr
        };
        let d = design_factored(&problem, &self.space, Some(&from.w), &sdr)?;
        let surrogate = *d
            .diagnostics
            .surrogate_trace
            .last()
            .expect("trace starts non-empty");
        let gains = d.diagnostics.relaxed_gains;
        Ok((
            self.iterate(d.w, gains, split, Some(d.diagnostics)),
            surrogate,
        ))
    }

    fn start(&self) -> Iterate {
        let w = FactoredGram::identity(&self.space);
        let gains = w.gains(&self.space);
        self.iterate(w, gains, self.benchmark_split(), None)
    }

    fn run(&self, start: Iterate, optimize_power: bool) -> Result<Solution> {
        let mut current = start.clone();
        let mut best = start;
        let mut last_diag = None;
        let (mut surrogate_trace, mut se_trace) = (Vec::new(), Vec::new());
        let mut converged = false;

        for _ in 0..self.cfg.max_outer_iters {
            let split = if optimize_power {
                self.power_step(&current)?
            } else {
                current.split
            };
            let (next, surrogate) = self.phase_step(&current, split)?;
            let change = (next.se - current.se).abs() / current.se.abs().max(1.0);
            surrogate_trace.push(surrogate);
            se_trace.push(next.se);
            last_diag = next.diagnostics.clone();
            if better(&next, &best) {
                best = next.clone();
            }
            current = next;
            if change < self.cfg.outer_tol {
                converged = true;
                break;
            }
        }
        self.finish(
            best,
            last_diag.expect("at least one outer iteration"),
            surrogate_trace,
            se_trace,
            converged,
        )
    }

    fn power_step(&self, at: &Iterate) -> Result<PowerSplit> {
        let sca = self.sca(at.gains, &at.split)?;
        let (psi_s, psi_w) = at.gains;
        let out = match self.cfg.power_method {
            PowerMethod::Exact => allocate_power(
                psi_s,
                psi_w,
                &sca,
                self.qos,
                self.power.total_w,
                self.power.max_w,
            )?,
            PowerMethod::DualAscent => dual_ascent(
                psi_s,
                psi_w,
                &sca,
                self.qos,
                self.power.total_w,
                self.power.max_w,
                &self.cfg.dual_ascent,
            )?,
        };
        if !out.feasible {
            // no split meets the QoS targets at these gains
            return Ok(at.split);
        }
        let old = crate::noma::surrogate_sum(psi_s, psi_w, &at.split, &sca, self.qos);
        Ok(if out.surrogate >= old || !at.feasible {
            out.split
        } else {
            at.split
        })
    }

    fn finish(
        &self,
        best: Iterate,
        last_diag: PhaseDiagnostics,
        surrogate_trace: Vec<f64>,
        se_trace: Vec<f64>,
        converged: bool,
    ) -> Result<Solution> {
        let mut diagnostics = best.diagnostics.clone().unwrap_or(last_diag);
        let mut gains = best.gains;
        let mut w = best.w;
        let mut rank_one = None;
        if self.cfg.sdr.try_rank_one && diagnostics.rank > 1 {
            let sca = self.sca(best.gains, &best.split)?;
            let problem = SdrProblem {
                f_strong: &self.f_strong,
                f_weak: &self.f_weak,
                split: best.split,
                sca,
                qos: *self.qos,
            };
            if let Some((m, g1)) = rank_one_candidate(&problem, &self.space, &w, best.gains)? {
                rank_one = Some(self.space.lift(&m));
                let mut core = HermitianMatrix::zeros(self.space.rank());
                core.add_outer(self.space.dim() as f64, &m);
                w = FactoredGram {
                    identity_weight: 0.0,
                    core,
                };
                gains = g1;
            }
        }
        diagnostics.rank_one_selected = rank_one.is_some();
        diagnostics.achieved_gains = gains;
        let (rs, rw, feasible) = self.evaluate(gains, &best.split);
        let report = SolveReport {
            se_bps_hz: if feasible { rs + rw } else { 0.0 },
            rate_strong: rs,
            rate_weak: rw,
            split: best.split,
            order: self.order,
            gains,
            surrogate_trace,
            outer_iterations: se_trace.len(),
            se_trace,
            phase: diagnostics,
            converged,
            outage: !feasible,
        };
        Ok(Solution {
            report,
            space: self.space.clone(),
            w,
            rank_one,
        })
    }
}

/// Feasible beats infeasible, then higher sum rate.
fn better(a: &Iterate, b: &Iterate) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => a.se > b.se,
    }
}

/// Fixed benchmark split, phases optimized.
pub fn benchmark(
    h_a: &ChannelVector,
    h_b: &ChannelVector,
    qos: &QosSpec,
    power: PowerBudget,
    cfg: &AltConfig,
) -> Result<SolveReport> {
    let setup = Setup::new(h_a, h_b, qos, power, cfg)?;
    Ok(setup.run(setup.start(), false)?.report)
}

/// Alternating optimization of split and phases.
pub fn optimize(
    h_a: &ChannelVector,
    h_b: &ChannelVector,
    qos: &QosSpec,
    power: PowerBudget,
    cfg: &AltConfig,
) -> Result<SolveReport> {
    Ok(solve_pair(h_a, h_b, qos, power, cfg)?.optimized.report)
}

/// Runs the benchmark, then the optimizer warm-started from it.
pub fn solve_pair(
    h_a: &ChannelVector,
    h_b: &ChannelVector,
    qos: &QosSpec,
    power: PowerBudget,
    cfg: &AltConfig,
) -> Result<TrialPair> {
    let setup = Setup::new(h_a, h_b, qos, power, cfg)?;
    let benchmark = setup.run(setup.start(), false)?;
    let from = {
        let gains = benchmark.w.gains(&setup.space);
        setup.iterate(
            benchmark.w.clone(),
            gains,
            benchmark.report.split,
            Some(benchmark.report.phase.clone()),
        )
    };
    let optimized = setup.run(from, true)?;
    Ok(TrialPair {
        benchmark,
        optimized,
    })
}
