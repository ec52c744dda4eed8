//! Phase-shift design for the transmissive surface.
//!
//! The design works on the Gram matrix `W = Phi Phi^H` relaxed to
//! `{W >= 0, Tr W = K}`. The weak user's interference term is linearized
//! around a Taylor point `W_hat`, the resulting concave program is solved by
//! Frank-Wolfe, the Taylor point is moved to the new solution and the loop
//! repeats. The phase matrix is finally rebuilt from the eigendecomposition
//! of `W`.

mod design;
mod frank_wolfe;
mod subspace;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noma::{PowerSplit, QosSpec, ScaCoefficients, ScaTerm};
use crate::numerics::{hermitian_eig, ComplexMatrix, HermitianMatrix};
use crate::tolerance::Tolerances;

pub(crate) use design::{design_factored, rank_one_candidate};
pub use design::{
    design_phase, design_phase_from, reconstruct_phase, PhaseDesign, PhaseDiagnostics,
};
pub use frank_wolfe::{solve_sdr, SdrSolution};
pub use subspace::{FactoredGram, Subspace};

/// Surface matrix `Phi_t` (K x K).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    m: ComplexMatrix,
}

impl PhaseMatrix {
    pub fn new(m: ComplexMatrix) -> Self {
        Self { m }
    }

    pub fn identity(k: usize) -> Self {
        Self::new(ComplexMatrix::identity(k))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    /// `Tr(Phi Phi^H)`.
    pub fn energy(&self) -> f64 {
        self.m.frobenius_norm_sqr()
    }

    pub fn gram(&self) -> HermitianMatrix {
        self.m.gram()
    }
}

/// `W` with its trace budget `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    w: HermitianMatrix,
    trace_budget: f64,
}

impl GramMatrix {
    /// Checks PSD-ness and the trace budget.
    pub fn new(w: HermitianMatrix, trace_budget: f64) -> Result<Self> {
        let tol = Tolerances::default();
        let g = Self { w, trace_budget };
        let tr = g.w.trace();
        if (tr - trace_budget).abs() > tol.trace_rel * trace_budget {
            return Err(Error::Domain(format!(
                "Tr(W) = {tr} differs from budget {trace_budget}"
            )));
        }
        let min = g.min_eigenvalue()?;
        if min < tol.psd_floor {
            return Err(Error::Domain(format!(
                "W has eigenvalue {min:e} below {:e}",
                tol.psd_floor
            )));
        }
        Ok(g)
    }

    pub(crate) fn new_unchecked(w: HermitianMatrix, trace_budget: f64) -> Self {
        Self { w, trace_budget }
    }

    /// `(K / dim) I`.
    pub fn scaled_identity(dim: usize, trace_budget: f64) -> Self {
        Self {
            w: HermitianMatrix::scaled_identity(dim, trace_budget / dim as f64),
            trace_budget,
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.w
    }

    pub fn trace_budget(&self) -> f64 {
        self.trace_budget
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*hermitian_eig(&self.w)?
            .eigenvalues
            .last()
            .expect("non-empty"))
    }

    /// `Tr(W h h^H) = h^H W h`.
    pub fn gain(&self, h: &[Complex64]) -> f64 {
        self.w.quad_form(h)
    }
}

/// `F = h h^H` together with `h`, which the solver uses to stay in the
/// channel subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterProduct {
    h: Vec<Complex64>,
    f: HermitianMatrix,
}

impl OuterProduct {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.f
    }

    pub fn vector(&self) -> &[Complex64] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }
}

pub fn outer_product(h: &[Complex64]) -> OuterProduct {
    OuterProduct {
        h: h.to_vec(),
        f: HermitianMatrix::outer(h),
    }
}

/// Everything the phase subproblem holds fixed.
#[derive(Debug, Clone, Copy)]
pub struct SdrProblem<'a> {
    pub f_strong: &'a OuterProduct,
    pub f_weak: &'a OuterProduct,
    pub split: PowerSplit,
    pub sca: ScaCoefficients,
    pub qos: QosSpec,
}

impl<'a> SdrProblem<'a> {
    pub fn dim(&self) -> usize {
        self.f_strong.dim()
    }

    /// Trace budget `K`.
    pub fn trace_budget(&self) -> f64 {
        self.dim() as f64
    }

    fn validate(&self) -> Result<()> {
        if self.f_weak.dim() != self.f_strong.dim() {
            return Err(Error::Dimension {
                expected: self.f_strong.dim(),
                actual: self.f_weak.dim(),
            });
        }
        self.qos.validate()
    }

    /// `p_strong P_t` and `p_weak P_t`.
    fn powers(&self) -> (f64, f64) {
        (
            self.split.p_strong * self.split.total_power_w,
            self.split.p_weak * self.split.total_power_w,
        )
    }

    /// First-order expansion of `g(W) = log2(sigma2 + Tr(W F_w) p_s P_t)` at
    /// a Taylor point with weak-user gain `x_hat`.
    pub(crate) fn linearize(&self, x_hat_weak: f64) -> Linearization {
        let (ps, _) = self.powers();
        let inner = self.qos.sigma2 + x_hat_weak * ps;
        Linearization {
            x_hat: x_hat_weak,
            value: inner.log2(),
            slope: ps / (std::f64::consts::LN_2 * inner),
        }
    }

    /// Linearized objective as a function of the two gains `Tr(W F)`;
    /// `-inf` outside the domain of the logarithms.
    pub(crate) fn surrogate(&self, x_strong: f64, x_weak: f64, lin: &Linearization) -> f64 {
        let (ps, pw) = self.powers();
        let strong = term(&self.sca.strong, || x_strong * ps / self.qos.sigma2);
        let weak = if self.sca.weak.alpha == 0.0 {
            self.sca.weak.beta
        } else {
            self.sca.weak.alpha
                * ((x_weak * pw).log2() - lin.value - lin.slope * (x_weak - lin.x_hat))
                + self.sca.weak.beta
        };
        nan_to_neg_inf(strong + weak)
    }

    /// Unlinearized relaxed objective: the SCA surrogate sum rate at gains `x`.
    pub fn relaxed(&self, x_strong: f64, x_weak: f64) -> f64 {
        let (ps, pw) = self.powers();
        let s2 = self.qos.sigma2;
        let strong = term(&self.sca.strong, || x_strong * ps / s2);
        let weak = term(&self.sca.weak, || x_weak * pw / (s2 + x_weak * ps));
        nan_to_neg_inf(strong + weak)
    }

    /// Gradient of the linearized objective in `W`, as coefficients of
    /// `F_strong` and `F_weak`.
    pub(crate) fn gradient(&self, x_strong: f64, x_weak: f64, lin: &Linearization) -> (f64, f64) {
        let ln2 = std::f64::consts::LN_2;
        let cs = if self.sca.strong.alpha == 0.0 {
            0.0
        } else {
            self.sca.strong.alpha / (ln2 * x_strong)
        };
        let cw = if self.sca.weak.alpha == 0.0 {
            0.0
        } else {
            self.sca.weak.alpha * (1.0 / (ln2 * x_weak) - lin.slope)
        };
        (cs, cw)
    }
}

fn term(t: &ScaTerm, sinr: impl FnOnce() -> f64) -> f64 {
    if t.alpha == 0.0 {
        t.beta
    } else {
        t.eval(sinr())
    }
}

fn nan_to_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Linearization {
    pub x_hat: f64,
    pub value: f64,
    pub slope: f64,
}

/// Linearized phase objective at `w` with Taylor point `taylor_point`.
pub fn sdr_objective(
    problem: &SdrProblem<'_>,
    w: &GramMatrix,
    taylor_point: &GramMatrix,
) -> Result<f64> {
    problem.validate()?;
    if w.dim() != problem.dim() || taylor_point.dim() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            actual: w.dim(),
        });
    }
    let xs = w.gain(problem.f_strong.vector());
    let xw = w.gain(problem.f_weak.vector());
    let x_hat = taylor_point.gain(problem.f_weak.vector());
    let (ps, _) = problem.powers();
    if problem.qos.sigma2 + x_hat * ps <= 0.0 {
        return Err(Error::Domain(
            "Taylor point gives a nonpositive interference term".into(),
        ));
    }
    if (problem.sca.strong.alpha != 0.0 && xs <= 0.0)
        || (problem.sca.weak.alpha != 0.0 && xw <= 0.0)
    {
        return Err(Error::Domain(format!(
            "nonpositive effective gain in a logarithm (strong {xs:e}, weak {xw:e})"
        )));
    }
    Ok(problem.surrogate(xs, xw, &problem.linearize(x_hat)))
}

/// Settings of the Frank-Wolfe solver and the Taylor loop around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdrConfig {
    pub max_iters: usize,
    /// Duality gap relative to `max(1, |objective|)`.
    pub gap_tol: f64,
    pub taylor_max_iters: usize,
    /// Relative improvement of the relaxed objective that ends the Taylor loop.
    pub taylor_tol: f64,
    /// Also try `Phi = sqrt(K) u_1` and keep it when it yields a higher sum rate.
    pub try_rank_one: bool,
    #[serde(skip)]
    pub tolerances: Tolerances,
}

impl Default for SdrConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            gap_tol: 1e-5,
            taylor_max_iters: 30,
            taylor_tol: 1e-4,
            try_rank_one: true,
            tolerances: Tolerances::default(),
        }
    }
}
