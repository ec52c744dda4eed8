//! Frank-Wolfe ascent on the linearized phase objective.
//!
//! Iterates are kept as `W = s B + Q C Q^H` where `B` is the starting base
//! (the identity, or an arbitrary dense start), `Q` the channel subspace
//! basis and `C` a small core matrix. The objective only depends on the two
//! gains `Tr(W F)`, so the line search and the duality gap are scalar work.

use super::subspace::{FactoredGram, Subspace};
use super::{GramMatrix, Linearization, SdrConfig, SdrProblem};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, HermitianMatrix};

const LINE_SEARCH_STEPS: usize = 60;

/// Output of [`solve_sdr`].
#[derive(Debug, Clone)]
pub struct SdrSolution {
    pub w: GramMatrix,
    /// Linearized objective after every iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Final duality gap divided by `max(1, |objective|)`.
    pub relative_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct FwState {
    /// Weight on the base matrix.
    pub base_weight: f64,
    /// `(h_s^H B h_s, h_w^H B h_w)`.
    pub base_gains: (f64, f64),
    pub core: HermitianMatrix,
}

impl FwState {
    pub fn from_factored(w: &FactoredGram, space: &Subspace) -> Self {
        let base = (
            crate::numerics::norm_sqr(space.strong_coords()),
            crate::numerics::norm_sqr(space.weak_coords()),
        );
        Self {
            base_weight: w.identity_weight,
            base_gains: base,
            core: w.core.clone(),
        }
    }

    pub fn gains(&self, space: &Subspace) -> (f64, f64) {
        (
            self.base_weight * self.base_gains.0 + self.core.quad_form(space.strong_coords()),
            self.base_weight * self.base_gains.1 + self.core.quad_form(space.weak_coords()),
        )
    }

    /// Valid only when the base is the identity.
    pub fn to_factored(&self) -> FactoredGram {
        FactoredGram {
            identity_weight: self.base_weight,
            core: self.core.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FwRun {
    pub state: FwState,
    pub gains: (f64, f64),
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub relative_gap: f64,
    pub converged: bool,
}

/// Maximizes the linearized objective starting from `state`.
pub(crate) fn run(
    problem: &SdrProblem<'_>,
    space: &Subspace,
    lin: &Linearization,
    mut state: FwState,
    cfg: &SdrConfig,
) -> Result<FwRun> {
    let k = problem.trace_budget();
    let (hs, hw) = (space.strong_coords(), space.weak_coords());
    let mut x = state.gains(space);
    let mut f = problem.surrogate(x.0, x.1, lin);
    if !f.is_finite() {
        return Err(Error::Domain(format!(
            "phase objective is not finite at the start point (gains {:e}, {:e})",
            x.0, x.1
        )));
    }
    let mut trace = vec![f];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let (cs, cw) = problem.gradient(x.0, x.1, lin);
        let mut g = HermitianMatrix::zeros(space.rank());
        g.add_outer(cs, hs);
        g.add_outer(cw, hw);
        let (lmax, m) = hermitian_eig(&g)?.principal();
        gap = (k * lmax - (cs * x.0 + cw * x.1)) / f.abs().max(1.0);
        if gap <= cfg.gap_tol {
            converged = true;
            break;
        }
        let v = (
            k * crate::numerics::inner(&m, hs).norm_sqr(),
            k * crate::numerics::inner(&m, hw).norm_sqr(),
        );
        let t = line_search(problem, lin, x, v);
        if t <= 0.0 {
            break;
        }
        let f_new = problem.surrogate(x.0 + t * (v.0 - x.0), x.1 + t * (v.1 - x.1), lin);
        if !(f_new >= f) {
            break;
        }
        state.base_weight *= 1.0 - t;
        state.core = state.core.scaled(1.0 - t);
        state.core.add_outer(t * k, &m);
        iterations += 1;
        x = state.gains(space);
        f = problem.surrogate(x.0, x.1, lin);
        trace.push(f);
    }
    Ok(FwRun {
        state,
        gains: x,
        objective_trace: trace,
        iterations,
        relative_gap: gap,
        converged,
    })
}

/// Step size maximizing the objective along the segment from gains `x` to
/// the vertex gains `v`. The derivative is decreasing, so bisection on its
/// sign finds the maximizer.
fn line_search(problem: &SdrProblem<'_>, lin: &Linearization, x: (f64, f64), v: (f64, f64)) -> f64 {
    let d = (v.0 - x.0, v.1 - x.1);
    let slope = |t: f64| {
        let (cs, cw) = problem.gradient(x.0 + t * d.0, x.1 + t * d.1, lin);
        cs * d.0 + cw * d.1
    };
    let s1 = slope(1.0);
    if s1.is_finite() && s1 >= 0.0 {
        return 1.0;
    }
    if !(slope(0.0) > 0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..LINE_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        let s = slope(mid);
        if s.is_finite() && s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Frank-Wolfe on the linearized phase objective from a dense feasible
/// start, with the weak-user interference linearized at `taylor_point`.
pub fn solve_sdr(
    problem: &SdrProblem<'_>,
    init: &GramMatrix,
    taylor_point: &GramMatrix,
    cfg: &SdrConfig,
) -> Result<SdrSolution> {
    problem.validate()?;
    for m in [init, taylor_point] {
        if m.dim() != problem.dim() {
            return Err(Error::Dimension {
                expected: problem.dim(),
                actual: m.dim(),
            });
        }
    }
    let space = Subspace::new(problem.f_strong.vector(), problem.f_weak.vector());
    let lin = problem.linearize(taylor_point.gain(problem.f_weak.vector()));
    let state = FwState {
        base_weight: 1.0,
        base_gains: (
            init.gain(problem.f_strong.vector()),
            init.gain(problem.f_weak.vector()),
        ),
        core: HermitianMatrix::zeros(space.rank()),
    };
    let out = run(problem, &space, &lin, state, cfg)?;
    let mut w = init.matrix().scaled(out.state.base_weight);
    let core = FactoredGram {
        identity_weight: 0.0,
        core: out.state.core.clone(),
    };
    w = w.add_scaled(1.0, &core.to_dense(&space));
    Ok(SdrSolution {
        w: GramMatrix::new_unchecked(w, init.trace_budget()),
        objective_trace: out.objective_trace,
        iterations: out.iterations,
        relative_gap: out.relative_gap,
        converged: out.converged,
    })
}
