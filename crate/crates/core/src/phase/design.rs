//! Taylor loop around the Frank-Wolfe solver and phase reconstruction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::frank_wolfe::{self, FwState};
use super::subspace::{FactoredGram, Subspace};
use super::{GramMatrix, PhaseMatrix, SdrConfig, SdrProblem};
use crate::error::Result;
use crate::noma::{rates, sinr_pair, PowerSplit, QosSpec};
use crate::numerics::{hermitian_eig, inner, ComplexMatrix, HermitianMatrix};

/// Solver record attached to every phase design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagnostics {
    pub taylor_iterations: usize,
    pub fw_iterations: usize,
    /// Relative duality gap of the last Frank-Wolfe run.
    pub relative_gap: f64,
    pub converged: bool,
    /// Eigenvalues of `W` above `rank_threshold * lambda_max`.
    pub rank: usize,
    pub min_eigenvalue: f64,
    pub rank_one_selected: bool,
    /// `Tr(W F)` of the relaxed solution, strong then weak.
    pub relaxed_gains: (f64, f64),
    /// `||Phi^H h||^2` of the returned phase matrix.
    pub achieved_gains: (f64, f64),
    /// Relaxed objective at the start and after each Taylor iteration.
    pub surrogate_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PhaseDesign {
    pub phi: PhaseMatrix,
    pub gram: GramMatrix,
    /// The returned `W` relative to the channel subspace, usable as a warm start.
    pub factored: FactoredGram,
    pub diagnostics: PhaseDiagnostics,
}

/// Principal direction `m` of a rank-one design and its `(strong, weak)` gains.
pub(crate) type RankOne = (Vec<Complex64>, (f64, f64));

/// Phase design without the dense matrices.
#[derive(Debug, Clone)]
pub(crate) struct FactoredDesign {
    pub w: FactoredGram,
    pub rank_one: Option<Vec<Complex64>>,
    pub diagnostics: PhaseDiagnostics,
}

impl FactoredDesign {
    pub fn materialize(self, space: &Subspace) -> Result<PhaseDesign> {
        let k = space.dim();
        let phi = match &self.rank_one {
            Some(u) => {
                let mut m = ComplexMatrix::zeros(k, k);
                let s = (k as f64).sqrt();
                for (row, z) in u.iter().enumerate() {
                    m.set(row, 0, z * s);
                }
                m
            }
            None => self.w.full_phase(space)?,
        };
        Ok(PhaseDesign {
            phi: PhaseMatrix::new(phi),
            gram: GramMatrix::new_unchecked(self.w.to_dense(space), k as f64),
            factored: self.w,
            diagnostics: self.diagnostics,
        })
    }
}

fn true_rates(gains: (f64, f64), split: &PowerSplit, qos: &QosSpec) -> (f64, f64) {
    let (gs, gw) = sinr_pair(gains.0, gains.1, split, qos);
    rates(gs, gw)
}

pub(crate) fn design_factored(
    problem: &SdrProblem<'_>,
    space: &Subspace,
    start: Option<&FactoredGram>,
    cfg: &SdrConfig,
) -> Result<FactoredDesign> {
    let mut state = match start {
        Some(w) => FwState::from_factored(w, space),
        None => FwState::from_factored(&FactoredGram::identity(space), space),
    };
    let mut x = state.gains(space);
    let mut prev = problem.relaxed(x.0, x.1);
    let mut trace = vec![prev];
    let (mut fw_iterations, mut taylor_iterations) = (0, 0);
    let mut gap = 0.0;
    let mut converged = false;

    while taylor_iterations < cfg.taylor_max_iters {
        let lin = problem.linearize(x.1);
        let run = frank_wolfe::run(problem, space, &lin, state.clone(), cfg)?;
        taylor_iterations += 1;
        fw_iterations += run.iterations;
        gap = run.relative_gap;
        let value = problem.relaxed(run.gains.0, run.gains.1);
        // the linearization minorizes the relaxed objective, so this only
        // fails through rounding
        if value >= prev {
            state = run.state;
            x = run.gains;
        }
        trace.push(value.max(prev));
        let improvement = (value - prev) / prev.abs().max(1.0);
        prev = prev.max(value);
        if improvement < cfg.taylor_tol {
            converged = run.converged;
            break;
        }
    }

    let w = state.to_factored();
    let k = space.dim() as f64;
    let (pairs, rest) = w.spectrum(space)?;
    let lmax = pairs[0].0.max(rest);
    let threshold = cfg.tolerances.rank_threshold * lmax;
    let rank = pairs.iter().filter(|(l, _)| *l > threshold).count()
        + if rest > threshold {
            space.dim() - space.rank()
        } else {
            0
        };
    let min_eigenvalue = pairs
        .iter()
        .map(|(l, _)| *l)
        .chain((space.dim() > space.rank()).then_some(rest))
        .fold(f64::INFINITY, f64::min);

    let mut achieved = x;
    let mut rank_one = None;
    let mut chosen = w.clone();
    if cfg.try_rank_one && rank > 1 {
        if let Some((m, g1)) = rank_one_candidate(problem, space, &w, x)? {
            let mut core = HermitianMatrix::zeros(space.rank());
            core.add_outer(k, &m);
            chosen = FactoredGram {
                identity_weight: 0.0,
                core,
            };
            rank_one = Some(space.lift(&m));
            achieved = g1;
        }
    }

    Ok(FactoredDesign {
        w: chosen,
        rank_one: rank_one.clone(),
        diagnostics: PhaseDiagnostics {
            taylor_iterations,
            fw_iterations,
            relative_gap: gap,
            converged,
            rank,
            min_eigenvalue,
            rank_one_selected: rank_one.is_some(),
            relaxed_gains: x,
            achieved_gains: achieved,
            surrogate_trace: trace,
        },
    })
}

/// Principal-direction truncation `K m m^H` of `w` (in subspace
/// coordinates) with its gains, when it beats the gains `x` of `w` on true
/// sum rate without breaking a QoS target that `w` meets.
pub(crate) fn rank_one_candidate(
    problem: &SdrProblem<'_>,
    space: &Subspace,
    w: &FactoredGram,
    x: (f64, f64),
) -> Result<Option<RankOne>> {
    let k = space.dim() as f64;
    let m = hermitian_eig(&w.core)?.vector(0);
    let g1 = (
        k * inner(&m, space.strong_coords()).norm_sqr(),
        k * inner(&m, space.weak_coords()).norm_sqr(),
    );
    let (full_s, full_w) = true_rates(x, &problem.split, &problem.qos);
    let (one_s, one_w) = true_rates(g1, &problem.split, &problem.qos);
    let r_min = problem.qos.r_min_bps_hz;
    let full_ok = full_s >= r_min && full_w >= r_min;
    let one_ok = one_s >= r_min && one_w >= r_min;
    Ok((one_s + one_w > full_s + full_w && (one_ok || !full_ok)).then_some((m, g1)))
}

/// Designs the phase matrix starting from `W = I`.
pub fn design_phase(problem: &SdrProblem<'_>, cfg: &SdrConfig) -> Result<PhaseDesign> {
    design_phase_from(problem, None, cfg)
}

/// Designs the phase matrix from a warm start expressed in the channel
/// subspace of `problem`.
pub fn design_phase_from(
    problem: &SdrProblem<'_>,
    start: Option<&FactoredGram>,
    cfg: &SdrConfig,
) -> Result<PhaseDesign> {
    problem.validate()?;
    let space = Subspace::new(problem.f_strong.vector(), problem.f_weak.vector());
    design_factored(problem, &space, start, cfg)?.materialize(&space)
}

/// `Phi = U diag(sqrt(Sigma))` from `W = U Sigma U^H`, negative rounding
/// noise in `Sigma` clamped to zero.
pub fn reconstruct_phase(w: &GramMatrix) -> Result<PhaseMatrix> {
    let e = hermitian_eig(w.matrix())?;
    let n = e.dim();
    let mut phi = ComplexMatrix::zeros(n, n);
    for (col, l) in e.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        for row in 0..n {
            phi.set(row, col, e.eigenvectors.get(row, col) * s);
        }
    }
    Ok(PhaseMatrix::new(phi))
}

#[cfg(test)]
mod tests {
    use super::super::{outer_product, solve_sdr, OuterProduct};
    use super::*;
    use crate::channel::ChannelVector;
    use crate::noma::{sca_coefficients, ScaCoefficients, ScaTerm};
    use crate::numerics::norm_sqr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                Complex64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ) * scale
            })
            .collect()
    }

    fn effective_gain(h: &[Complex64], phi: &PhaseMatrix) -> Result<f64> {
        crate::channel::effective_gain(
            &ChannelVector {
                entries: h.to_vec(),
                large_scale_gain: 1.0,
            },
            phi,
        )
    }

    fn split(ps: f64) -> PowerSplit {
        PowerSplit {
            p_strong: ps,
            p_weak: 1.0 - ps,
            total_power_w: 20.0,
            max_power_w: 20.0,
        }
    }

    struct Instance {
        fs: OuterProduct,
        fw: OuterProduct,
        split: PowerSplit,
        sca: ScaCoefficients,
        qos: QosSpec,
    }

    impl Instance {
        fn problem(&self) -> SdrProblem<'_> {
            SdrProblem {
                f_strong: &self.fs,
                f_weak: &self.fw,
                split: self.split,
                sca: self.sca,
                qos: self.qos,
            }
        }
    }

    fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
        let hs = random_vec(rng, k, 1e-3);
        let hw = random_vec(rng, k, 0.5e-3);
        let qos = QosSpec {
            r_min_bps_hz: 0.0,
            sigma2: 1e-5,
        };
        let sp = split(rng.random_range(0.1..0.5));
        let (gs, gw) = sinr_pair(norm_sqr(&hs), norm_sqr(&hw), &sp, &qos);
        Instance {
            fs: outer_product(&hs),
            fw: outer_product(&hw),
            split: sp,
            sca: sca_coefficients(gs, gw).unwrap(),
            qos,
        }
    }

    #[test]
    fn single_user_reaches_the_vertex_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [4usize, 16] {
            let hs = random_vec(&mut rng, k, 1.0);
            let hw = random_vec(&mut rng, k, 1.0);
            let sca = ScaCoefficients {
                strong: ScaTerm::new(3.0).unwrap(),
                weak: ScaTerm::disabled(),
            };
            let inst = Instance {
                fs: outer_product(&hs),
                fw: outer_product(&hw),
                split: split(0.3),
                sca,
                qos: QosSpec {
                    r_min_bps_hz: 0.0,
                    sigma2: 1.0,
                },
            };
            let d = design_phase(&inst.problem(), &SdrConfig::default()).unwrap();
            let target = k as f64 * norm_sqr(&hs);
            let got = d.diagnostics.achieved_gains.0;
            assert!((got - target).abs() <= 1e-3 * target, "{got} vs {target}");
        }
    }

    #[test]
    fn first_step_from_identity_improves() {
        let hs = vec![Complex64::new(1.0, 0.5), Complex64::new(-0.2, 0.7)];
        let hw = vec![Complex64::new(0.3, -0.1), Complex64::new(0.4, 0.2)];
        let qos = QosSpec {
            r_min_bps_hz: 0.0,
            sigma2: 0.1,
        };
        let sp = split(0.3);
        let (gs, gw) = sinr_pair(norm_sqr(&hs), norm_sqr(&hw), &sp, &qos);
        let inst = Instance {
            fs: outer_product(&hs),
            fw: outer_product(&hw),
            split: sp,
            sca: sca_coefficients(gs, gw).unwrap(),
            qos,
        };
        let init = GramMatrix::scaled_identity(2, 2.0);
        let cfg = SdrConfig {
            max_iters: 1,
            ..SdrConfig::default()
        };
        let sol = solve_sdr(&inst.problem(), &init, &init, &cfg).unwrap();
        assert_eq!(sol.objective_trace.len(), 2);
        assert!(sol.objective_trace[1] > sol.objective_trace[0]);
    }

    #[test]
    fn solver_certificate_and_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [3usize, 16] {
            for _ in 0..10 {
                let inst = random_instance(&mut rng, k);
                let init = GramMatrix::scaled_identity(k, k as f64);
                let sol = solve_sdr(&inst.problem(), &init, &init, &SdrConfig::default()).unwrap();
                assert!(sol.converged, "gap {}", sol.relative_gap);
                assert!(sol.relative_gap <= 1e-4);
                for w in sol.objective_trace.windows(2) {
                    assert!(w[1] >= w[0] - 1e-10);
                }
                assert!(GramMatrix::new(sol.w.matrix().clone(), k as f64).is_ok());
            }
        }
    }

    #[test]
    fn dense_and_factored_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = random_instance(&mut rng, 6);
        let p = inst.problem();
        let init = GramMatrix::scaled_identity(6, 6.0);
        let cfg = SdrConfig::default();
        let dense = solve_sdr(&p, &init, &init, &cfg).unwrap();
        let space = Subspace::new(inst.fs.vector(), inst.fw.vector());
        let lin = p.linearize(init.gain(inst.fw.vector()));
        let run = frank_wolfe::run(
            &p,
            &space,
            &lin,
            FwState::from_factored(&FactoredGram::identity(&space), &space),
            &cfg,
        )
        .unwrap();
        assert!(
            run.state
                .to_factored()
                .to_dense(&space)
                .max_abs_diff(dense.w.matrix())
                < 1e-10
        );
    }

    #[test]
    fn taylor_trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let inst = random_instance(&mut rng, 16);
            let cfg = SdrConfig {
                try_rank_one: false,
                ..SdrConfig::default()
            };
            let d = design_phase(&inst.problem(), &cfg).unwrap();
            let t = &d.diagnostics.surrogate_trace;
            assert!(t.len() >= 2);
            for w in t.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "{t:?}");
            }
            assert!(d.diagnostics.min_eigenvalue >= -1e-8);
            assert!((d.phi.energy() - 16.0).abs() <= 1e-6 * 16.0);
            // full reconstruction realizes the relaxed gains
            let (rs, rw) = d.diagnostics.relaxed_gains;
            let es = effective_gain(inst.fs.vector(), &d.phi).unwrap();
            let ew = effective_gain(inst.fw.vector(), &d.phi).unwrap();
            assert!((es - rs).abs() <= 1e-6 * rs && (ew - rw).abs() <= 1e-6 * rw);
        }
    }

    #[test]
    fn warm_start_never_loses_ground() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let inst = random_instance(&mut rng, 9);
        let cfg = SdrConfig {
            try_rank_one: false,
            ..SdrConfig::default()
        };
        let first = design_phase(&inst.problem(), &cfg).unwrap();
        let again = design_phase_from(&inst.problem(), Some(&first.factored), &cfg).unwrap();
        let a = first.diagnostics.surrogate_trace.last().unwrap();
        let b = again.diagnostics.surrogate_trace.last().unwrap();
        assert!(b >= a);
    }

    #[test]
    fn rank_one_reconstruction() {
        let u = {
            let v = vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
                Complex64::new(0.0, 0.0),
            ];
            v
        };
        let mut w = HermitianMatrix::zeros(3);
        w.add_outer(3.0, &u);
        let gram = GramMatrix::new(w, 3.0).unwrap();
        let phi = reconstruct_phase(&gram).unwrap();
        assert!((phi.energy() - 3.0).abs() < 1e-9);
        let h = vec![
            Complex64::new(1.0, -0.3),
            Complex64::new(0.2, 0.5),
            Complex64::new(-0.7, 0.1),
        ];
        let expect = 3.0 * inner(&u, &h).norm_sqr();
        assert!((effective_gain(&h, &phi).unwrap() - expect).abs() < 1e-9 * expect);
        // only the first column carries energy
        let col0 = phi.matrix().column(0);
        assert!((norm_sqr(&col0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn identity_reconstruction_keeps_channel_norm() {
        let gram = GramMatrix::scaled_identity(4, 4.0);
        let phi = reconstruct_phase(&gram).unwrap();
        let h = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 0.3),
            Complex64::new(0.9, -0.9),
        ];
        assert!((effective_gain(&h, &phi).unwrap() - norm_sqr(&h)).abs() < 1e-9);
    }

    #[test]
    fn concavity_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let inst = random_instance(&mut rng, 5);
        let p = inst.problem();
        let random_gram = |rng: &mut ChaCha8Rng| {
            let mut w = HermitianMatrix::zeros(5);
            for _ in 0..3 {
                w.add_outer(1.0, &random_vec(rng, 5, 1.0));
            }
            let tr = w.trace();
            GramMatrix::new(w.scaled(5.0 / tr), 5.0).unwrap()
        };
        let taylor = random_gram(&mut rng);
        for _ in 0..20 {
            let (w1, w2) = (random_gram(&mut rng), random_gram(&mut rng));
            let f1 = super::super::sdr_objective(&p, &w1, &taylor).unwrap();
            let f2 = super::super::sdr_objective(&p, &w2, &taylor).unwrap();
            for t in [0.25, 0.5, 0.75] {
                let mix =
                    GramMatrix::new(w1.matrix().scaled(t).add_scaled(1.0 - t, w2.matrix()), 5.0)
                        .unwrap();
                let fm = super::super::sdr_objective(&p, &mix, &taylor).unwrap();
                assert!(fm >= t * f1 + (1.0 - t) * f2 - 1e-9);
            }
        }
    }
}
