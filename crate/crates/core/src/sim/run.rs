use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{integer_sqrt, ExperimentConfig, SweepKind};
use crate::channel::{
    channel_with_gain, draw_rayleigh_gain, ArrayGeometry, ChannelVector, LinkGeometry,
};
use crate::error::Result;
use crate::optimizer::{solve_pair, TrialPair};
use crate::parallel::{map_indexed, Execution};

/// Seed of trial `trial`, independent of the sweep point so every point
/// sees the same channel draws.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

/// Per-user random link parameters; they do not depend on the array size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserDraw {
    pub small_scale_gain: f64,
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
}

impl UserDraw {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, max_elevation_rad: f64) -> Self {
        let small_scale_gain = draw_rayleigh_gain(rng);
        let elevation_rad = if max_elevation_rad > 0.0 {
            rng.random_range(-max_elevation_rad..=max_elevation_rad)
        } else {
            0.0
        };
        let azimuth_rad = rng.random_range(0.0..std::f64::consts::TAU);
        Self {
            small_scale_gain,
            elevation_rad,
            azimuth_rad,
        }
    }
}

/// Both users' draws for one trial seed.
pub fn draw_users(seed: u64, max_elevation_rad: f64) -> (UserDraw, UserDraw) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = UserDraw::sample(&mut rng, max_elevation_rad);
    let b = UserDraw::sample(&mut rng, max_elevation_rad);
    (a, b)
}

/// Sweep-point parameters after substituting the swept value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSetup {
    pub k_x: usize,
    pub k_y: usize,
    pub p_t_w: f64,
}

impl PointSetup {
    pub fn new(cfg: &ExperimentConfig, kind: SweepKind, value: f64) -> Self {
        let p = &cfg.physical;
        match kind {
            SweepKind::Power => Self {
                k_x: p.k_x,
                k_y: p.k_y,
                p_t_w: value,
            },
            SweepKind::Elements => {
                let side = integer_sqrt(value as usize).expect("validated square");
                Self {
                    k_x: side,
                    k_y: side,
                    p_t_w: p.p_t_w,
                }
            }
        }
    }
}

/// Channel of one user; the slant range grows as `altitude / cos(theta)`.
pub fn user_channel(
    cfg: &ExperimentConfig,
    point: &PointSetup,
    draw: &UserDraw,
) -> Result<ChannelVector> {
    let p = &cfg.physical;
    let geom = ArrayGeometry::half_wavelength(point.k_x, point.k_y, p.carrier_hz)?;
    let link = LinkGeometry {
        distance_m: p.altitude_m / draw.elevation_rad.cos(),
        elevation_rad: draw.elevation_rad,
        azimuth_rad: draw.azimuth_rad,
        doppler_cycles: p.doppler_cycles,
        pathloss_exponent: p.pathloss_exponent,
    };
    link.validate()?;
    Ok(channel_with_gain(
        &geom,
        &link,
        draw.small_scale_gain,
        p.normalization(),
    ))
}

/// Channels of trial `seed` at `point`, in input order (a, b).
pub fn trial_channels(
    cfg: &ExperimentConfig,
    point: &PointSetup,
    seed: u64,
) -> Result<(ChannelVector, ChannelVector)> {
    let (a, b) = draw_users(seed, cfg.physical.max_elevation_deg.to_radians());
    Ok((user_channel(cfg, point, &a)?, user_channel(cfg, point, &b)?))
}

/// Benchmark and optimized solutions for trial `seed` at `point`.
pub fn run_trial(cfg: &ExperimentConfig, point: &PointSetup, seed: u64) -> Result<TrialPair> {
    let (h_a, h_b) = trial_channels(cfg, point, seed)?;
    let power = cfg.physical.power(point.p_t_w)?;
    solve_pair(&h_a, &h_b, &cfg.physical.qos(), power, &cfg.solver)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_var: String,
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub se_optimal: f64,
    pub se_benchmark: f64,
    pub r_strong: f64,
    pub r_weak: f64,
    pub p_strong: f64,
    pub outer_iters: usize,
    pub converged: bool,
    pub outage: bool,
    pub benchmark_outage: bool,
}

fn record(kind: SweepKind, value: f64, trial: usize, seed: u64, pair: &TrialPair) -> TrialRecord {
    let (o, b) = (&pair.optimized.report, &pair.benchmark.report);
    TrialRecord {
        sweep_var: kind.variable().to_string(),
        value,
        trial,
        seed,
        se_optimal: o.se_bps_hz,
        se_benchmark: b.se_bps_hz,
        r_strong: o.rate_strong,
        r_weak: o.rate_weak,
        p_strong: o.split.p_strong,
        outer_iters: o.outer_iterations,
        converged: o.converged,
        outage: o.outage,
        benchmark_outage: b.outage,
    }
}

/// Aggregates of one sweep point. Means exclude outage trials of the
/// respective framework; the gap is averaged over trials where neither is
/// in outage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub value: f64,
    pub trials: usize,
    pub counted_optimal: usize,
    pub outage_optimal: usize,
    pub counted_benchmark: usize,
    pub outage_benchmark: usize,
    pub mean_se_optimal: f64,
    pub stderr_optimal: f64,
    pub mean_se_benchmark: f64,
    pub stderr_benchmark: f64,
    pub paired_trials: usize,
    pub mean_gap: f64,
    pub stderr_gap: f64,
    pub mean_outer_iters: f64,
    pub converged_fraction: f64,
}

/// Sample mean and standard error; zeros for an empty sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl PointSummary {
    pub fn from_records(value: f64, rows: &[TrialRecord]) -> Self {
        let opt: Vec<f64> = rows
            .iter()
            .filter(|r| !r.outage)
            .map(|r| r.se_optimal)
            .collect();
        let bench: Vec<f64> = rows
            .iter()
            .filter(|r| !r.benchmark_outage)
            .map(|r| r.se_benchmark)
            .collect();
        let gap: Vec<f64> = rows
            .iter()
            .filter(|r| !r.outage && !r.benchmark_outage)
            .map(|r| r.se_optimal - r.se_benchmark)
            .collect();
        let (mean_se_optimal, stderr_optimal) = mean_stderr(&opt);
        let (mean_se_benchmark, stderr_benchmark) = mean_stderr(&bench);
        let (mean_gap, stderr_gap) = mean_stderr(&gap);
        let n = rows.len().max(1) as f64;
        Self {
            value,
            trials: rows.len(),
            counted_optimal: opt.len(),
            outage_optimal: rows.len() - opt.len(),
            counted_benchmark: bench.len(),
            outage_benchmark: rows.len() - bench.len(),
            mean_se_optimal,
            stderr_optimal,
            mean_se_benchmark,
            stderr_benchmark,
            paired_trials: gap.len(),
            mean_gap,
            stderr_gap,
            mean_outer_iters: rows.iter().map(|r| r.outer_iters as f64).sum::<f64>() / n,
            converged_fraction: rows.iter().filter(|r| r.converged).count() as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub master_seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub experiment: String,
    pub sweep: SweepKind,
    pub config: ExperimentConfig,
    pub points: Vec<PointSummary>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub summary: SweepSummary,
    /// Point-major, then trial order.
    pub records: Vec<TrialRecord>,
}

pub fn run_power_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    run_sweep(cfg, SweepKind::Power, exec)
}

pub fn run_element_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    run_sweep(cfg, SweepKind::Elements, exec)
}

pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let values: Vec<f64> = match kind {
        SweepKind::Power => cfg.sweeps.power_w.clone(),
        SweepKind::Elements => cfg.sweeps.elements.iter().map(|&k| k as f64).collect(),
    };
    let trials = cfg.trials;
    let seeds: Vec<u64> = (0..trials)
        .map(|t| trial_seed(cfg.master_seed, t))
        .collect();
    let results = map_indexed(values.len() * trials, exec, |i| {
        let (point_index, trial) = (i / trials, i % trials);
        let value = values[point_index];
        let point = PointSetup::new(cfg, kind, value);
        run_trial(cfg, &point, seeds[trial])
            .map(|pair| record(kind, value, trial, seeds[trial], &pair))
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &v)| PointSummary::from_records(v, &records[i * trials..(i + 1) * trials]))
        .collect();
    Ok(SweepResult {
        summary: SweepSummary {
            experiment: kind.experiment().to_string(),
            sweep: kind,
            config: cfg.clone(),
            points,
            provenance: Provenance {
                config_sha256: cfg.digest(),
                master_seed: cfg.master_seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        },
        records,
    })
}
