//! Monte Carlo sweeps over transmit power and surface size.
//!
//! Trial `t` draws its channels from a seed that depends only on the master
//! seed and `t`, so every sweep point sees the same fading and geometry.

mod config;
mod output;
mod run;

pub use config::{integer_sqrt, ExperimentConfig, PhysicalParams, SweepKind, SweepValues};
pub use output::{csv_bytes, output_paths, read_summary, summary_json, write_results, OutputPaths};
pub use run::{
    draw_users, mean_stderr, run_element_sweep, run_power_sweep, run_sweep, run_trial,
    trial_channels, trial_seed, user_channel, PointSetup, PointSummary, Provenance, SweepResult,
    SweepSummary, TrialRecord, UserDraw,
};
