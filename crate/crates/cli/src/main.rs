use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdris_leo::optimizer::SolveReport;
use bdris_leo::parallel::{with_workers, Execution};
use bdris_leo::sim::{self, ExperimentConfig, PointSetup, SweepKind};
use bdris_leo::Error;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const BUNDLED_CONFIG: &str = include_str!("../../../configs/paper.json");

#[derive(Debug, Parser)]
#[command(
    name = "bdris-leo",
    version,
    about = "Sum-rate sweeps for a BD-RIS LEO satellite serving two NOMA users"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the transmit power budget.
    SweepPower(SweepArgs),
    /// Sweep the number of surface elements.
    SweepElements(SweepArgs),
    /// Solve one channel draw and dump both reports as JSON.
    SingleTrial(TrialArgs),
    /// Check a config file and print its digest.
    ValidateConfig(ConfigArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON config; the bundled reference scenario is used when omitted.
    #[arg(short, long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Overrides {
    #[command(flatten)]
    config: ConfigArgs,
    /// Override the master seed.
    #[arg(short, long)]
    seed: Option<u64>,
    /// Override the number of trials per sweep point.
    #[arg(short, long)]
    trials: Option<usize>,
    /// Print progress and iteration traces to stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Exit with status 3 if any optimized trial did not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    /// Output directory for the CSV and JSON files.
    #[arg(short, long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// File name suffix; defaults to `seed<master seed>`.
    #[arg(long)]
    tag: Option<String>,
    /// Worker threads; 0 or unset uses all cores.
    #[arg(long, env = "BDRIS_LEO_WORKERS")]
    workers: Option<usize>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct TrialArgs {
    #[command(flatten)]
    common: Overrides,
    /// Trial index under the master seed.
    #[arg(long, default_value_t = 0, conflicts_with = "trial_seed")]
    trial: usize,
    /// Use this trial seed directly, e.g. the `seed` column of a sweep CSV.
    #[arg(long)]
    trial_seed: Option<u64>,
    /// Transmit power in watts; defaults to `physical.p_t_w`.
    #[arg(long)]
    power: Option<f64>,
    /// Square element count; defaults to `k_x * k_y`.
    #[arg(long)]
    elements: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Solver(m) => format!("solver error: {m}"),
            Failure::Io(m) => format!("i/o error: {m}"),
        }
    }

    /// Errors raised while running; config problems are caught earlier.
    fn from_run(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            Error::Io { .. } | Error::Json { .. } => Failure::Io(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let loaded = match &args.config {
        Some(path) => ExperimentConfig::load(path),
        None => ExperimentConfig::from_json(BUNDLED_CONFIG),
    };
    loaded.map_err(|e| Failure::Config(e.to_string()))
}

fn resolve(o: &Overrides) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&o.config)?;
    if let Some(seed) = o.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = o.trials {
        cfg.trials = trials;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn sweep(kind: SweepKind, args: &SweepArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.common)?;
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let res = with_workers(args.workers, || sim::run_sweep(&cfg, kind, exec))
        .map_err(Failure::from_run)?;
    let tag = args
        .tag
        .clone()
        .unwrap_or_else(|| format!("seed{}", cfg.master_seed));
    let paths = sim::write_results(&res, &args.out, &tag).map_err(Failure::from_run)?;

    if args.common.verbose > 0 {
        eprintln!(
            "{:>10} {:>10} {:>10} {:>10} {:>8} {:>9}",
            kind.variable(),
            "optimal",
            "benchmark",
            "gap",
            "outage",
            "converged"
        );
        for p in &res.summary.points {
            eprintln!(
                "{:>10} {:>10.4} {:>10.4} {:>10.4} {:>8} {:>9.3}",
                p.value,
                p.mean_se_optimal,
                p.mean_se_benchmark,
                p.mean_gap,
                p.outage_optimal,
                p.converged_fraction
            );
        }
    }
    println!("{}", paths.csv.display());
    println!("{}", paths.json.display());

    let stalled = res.records.iter().filter(|r| !r.converged).count();
    if args.common.strict && stalled > 0 {
        return Err(Failure::Solver(format!(
            "{stalled} of {} trials did not converge",
            res.records.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct TrialDump<'a> {
    seed: u64,
    elements: usize,
    p_t_w: f64,
    benchmark: &'a SolveReport,
    optimized: &'a SolveReport,
}

fn single_trial(args: &TrialArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.common)?;
    // The channel scale stays pinned to the nominal geometry, as in the sweeps.
    let mut point = PointSetup {
        k_x: cfg.physical.k_x,
        k_y: cfg.physical.k_y,
        p_t_w: cfg.physical.p_t_w,
    };
    if let Some(p) = args.power {
        point.p_t_w = p;
    }
    if let Some(k) = args.elements {
        let side = sim::integer_sqrt(k)
            .filter(|&s| s > 0)
            .ok_or_else(|| Failure::Config(format!("--elements {k} is not a square grid size")))?;
        point.k_x = side;
        point.k_y = side;
    }
    let seed = args
        .trial_seed
        .unwrap_or_else(|| sim::trial_seed(cfg.master_seed, args.trial));
    let pair = sim::run_trial(&cfg, &point, seed).map_err(Failure::from_run)?;
    let opt = &pair.optimized.report;

    if args.common.verbose > 0 {
        eprintln!(
            "trial seed {seed}, K = {}, P_t = {} W",
            point.k_x * point.k_y,
            point.p_t_w
        );
        eprintln!("benchmark se {:.6}", pair.benchmark.report.se_bps_hz);
        for (i, (s, r)) in opt.surrogate_trace.iter().zip(&opt.se_trace).enumerate() {
            eprintln!("outer {:>3}  surrogate {s:.9}  se {r:.9}", i + 1);
        }
        eprintln!(
            "optimal se {:.6} ({} iterations, converged: {})",
            opt.se_bps_hz, opt.outer_iterations, opt.converged
        );
    }

    let dump = TrialDump {
        seed,
        elements: point.k_x * point.k_y,
        p_t_w: point.p_t_w,
        benchmark: &pair.benchmark.report,
        optimized: opt,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&dump).expect("report serializes")
    );

    if args.common.strict && !opt.converged {
        return Err(Failure::Solver(format!(
            "alternating optimization stopped after {} iterations",
            opt.outer_iterations
        )));
    }
    Ok(())
}

fn validate(args: &ConfigArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let source = args
        .config
        .as_deref()
        .unwrap_or(Path::new("<bundled paper.json>"));
    println!("{}: ok (sha256 {})", source.display(), cfg.digest());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::SweepPower(a) => sweep(SweepKind::Power, a),
        Command::SweepElements(a) => sweep(SweepKind::Elements, a),
        Command::SingleTrial(a) => single_trial(a),
        Command::ValidateConfig(a) => validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
