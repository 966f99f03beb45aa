//! `safety-inspector` command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration errors (bad flags, unreadable
//! or invalid config files), 2 for runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use safety_inspector::experiment::RunInfo;
use safety_inspector::output::{trace_rows, write_csv, write_metadata};
use safety_inspector::spec::GridPoint;
use safety_inspector::{
    emit, run_experiment, AlgorithmSpec, ArmLaw, ExperimentSpec, Format, Grid, PolicyName,
    ResultSet, SimError,
};
use safety_inspector_core::bounds::{detection_time_bound, handicap_bound_relaxed, kl_divergence};
use safety_inspector_core::{run, Algorithm, BanditEnv, Recording, SafetyConfig};
use serde_json::json;

const OUT_ENV: &str = "SAFETY_INSPECTOR_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "safety-inspector",
    version,
    about = "One-sided SPRT safety inspector for Bernoulli bandits"
)]
struct Cli {
    /// More output (-v per-point summaries).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment from a config file and/or flags (default: three 0.8 arms).
    Simulate(ExperimentArgs),
    /// Transient experiment: handicap and safety-ratio curves, testing-time histogram.
    Exp1(ExperimentArgs),
    /// Steady-state sweep of the final handicap and safety ratio over epsilon x alpha.
    Exp2(ExperimentArgs),
    /// Print the test constants and analytic bounds.
    Bounds(BoundsArgs),
    /// Per-pull log-likelihood and zero-count trace of a single run.
    Trace(TraceArgs),
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: f64,
    /// Number of unsafe arms for the handicap bound.
    #[arg(long = "unsafe", default_value_t = 1)]
    num_unsafe: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    /// Comma-separated arm means.
    #[arg(long, value_delimiter = ',', required = true)]
    arms: Vec<f64>,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Flawless,
    Relaxed,
    FilteredUniform,
    FilteredGreedy,
}

impl From<AlgorithmArg> for AlgorithmSpec {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Flawless => AlgorithmSpec::Flawless,
            AlgorithmArg::Relaxed => AlgorithmSpec::Relaxed,
            AlgorithmArg::FilteredUniform => AlgorithmSpec::Filtered {
                policy: PolicyName::Uniform,
            },
            AlgorithmArg::FilteredGreedy => AlgorithmSpec::Filtered {
                policy: PolicyName::Greedy,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON experiment spec; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of arms.
    #[arg(long)]
    arms: Option<usize>,
    /// Explicit comma-separated arm means.
    #[arg(long, value_delimiter = ',', conflicts_with = "uniform")]
    arm_values: Option<Vec<f64>>,
    /// Uniform law for the arm means, as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    uniform: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    checkpoints: Option<u64>,
    /// Write the per-pull trace of replication 0.
    #[arg(long)]
    record_trace: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output directory (default: $SAFETY_INSPECTOR_OUT/<command> or out/<command>).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_out(command: &str) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
        .join(command)
}

fn sig7(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (6 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn run_info(started: u64, clock: Instant) -> RunInfo {
    RunInfo {
        code_version: env!("CARGO_PKG_VERSION").to_owned(),
        started_unix_secs: started,
        wall_time_secs: clock.elapsed().as_secs_f64(),
    }
}

/// Applies a flag over the config value, reporting when the two disagree.
fn override_field<T: PartialEq + std::fmt::Debug>(
    from_file: bool,
    name: &str,
    slot: &mut T,
    flag: Option<T>,
) {
    if let Some(v) = flag {
        if from_file && *slot != v {
            println!(
                "note: --{name} overrides config value {:?} with {:?}",
                slot, v
            );
        }
        *slot = v;
    }
}

fn resolve_spec(command: &str, args: &ExperimentArgs) -> Result<ExperimentSpec, SimError> {
    let from_file = args.config.is_some();
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => match command {
            "exp1" => ExperimentSpec::transient_desk(),
            "exp2" => ExperimentSpec::sweep_desk(),
            _ => ExperimentSpec::single_test_demo(),
        },
    };
    let law = match (&args.arm_values, &args.uniform) {
        (Some(values), _) => Some(ArmLaw::Explicit(values.clone())),
        (None, Some(bounds)) => match bounds.as_slice() {
            [lo, hi] => Some(ArmLaw::Uniform { lo: *lo, hi: *hi }),
            _ => {
                return Err(SimError::Config(
                    "--uniform expects exactly two values `lo,hi`".into(),
                ))
            }
        },
        (None, None) => None,
    };
    let arms_from_values = args.arm_values.as_ref().map(Vec::len);
    override_field(from_file, "arm-values/--uniform", &mut spec.arm_law, law);
    override_field(
        from_file,
        "arms",
        &mut spec.arms,
        args.arms.or(arms_from_values),
    );
    override_field(
        from_file,
        "mu",
        &mut spec.mu,
        args.mu.clone().map(|v| Some(Grid::from(v))),
    );
    override_field(
        from_file,
        "eps",
        &mut spec.epsilon,
        args.eps.clone().map(|v| Some(Grid::from(v))),
    );
    override_field(
        from_file,
        "alpha",
        &mut spec.alpha,
        args.alpha.clone().map(|v| Some(Grid::from(v))),
    );
    override_field(
        from_file,
        "replications",
        &mut spec.replications,
        args.replications,
    );
    override_field(from_file, "horizon", &mut spec.horizon, args.horizon);
    override_field(from_file, "seed", &mut spec.master_seed, args.seed);
    override_field(
        from_file,
        "algorithm",
        &mut spec.algorithm,
        args.algorithm.map(Into::into),
    );
    override_field(
        from_file,
        "workers",
        &mut spec.workers,
        args.workers.map(Some),
    );
    override_field(
        from_file,
        "checkpoints",
        &mut spec.checkpoints,
        args.checkpoints,
    );
    if args.record_trace {
        spec.record_trace = true;
    }
    let out = args
        .out
        .clone()
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| default_out(command));
    spec.output = Some(out);
    spec.grid_points()?;
    Ok(spec)
}

fn print_summary(results: &ResultSet, verbose: u8) {
    println!(
        "{:>8} {:>8} {:>8} {:>14} {:>14} {:>10} {:>10} {:>9}",
        "mu", "epsilon", "alpha", "nhandicap_inf", "bound", "rho_inf", "rho_bound", "censored"
    );
    for p in &results.points {
        let alpha = p.alpha.map_or_else(|| "-".to_owned(), sig7);
        let rho = p.rho_inf.map_or_else(|| "-".to_owned(), |s| sig7(s.mean));
        println!(
            "{:>8} {:>8} {:>8} {:>14} {:>14} {:>10} {:>10} {:>9}",
            sig7(p.mu),
            sig7(p.epsilon),
            alpha,
            sig7(p.nhandicap_inf.mean),
            sig7(p.bounds.nhandicap),
            rho,
            sig7(p.bounds.rho),
            p.censored_runs
        );
        if verbose > 0 {
            if let (Some(mean), Some(bound)) = (p.testing_time_mean, p.bounds.testing_time) {
                println!(
                    "         unsafe testing time: mean {} over {} arms, bound {}",
                    sig7(mean),
                    p.testing_times.len(),
                    sig7(bound)
                );
            }
        }
    }
}

fn cmd_experiment(command: &str, args: &ExperimentArgs, verbose: u8) -> Result<(), SimError> {
    let mut spec = resolve_spec(command, args)?;
    let dir = spec.output.take().expect("resolved spec has an output");
    let mut results = run_experiment(&spec)?;
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    results.spec.output = Some(dir.clone());
    let written = emit(&results, &dir, format)?;
    print_summary(&results, verbose);
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), SimError> {
    let started = now_secs();
    let clock = Instant::now();
    let c = SafetyConfig::new(args.mu, args.eps, args.alpha)
        .map_err(|e| SimError::Config(e.to_string()))?;
    let kl = kl_divergence(&c);
    let detection = detection_time_bound(&c);
    let handicap = handicap_bound_relaxed(&c, args.num_unsafe);
    println!("lambda0 = {}", sig7(c.lambda0()));
    println!("lambda1 = {}", sig7(c.lambda1()));
    println!("log A = {}", sig7(c.log_threshold()));
    println!("D_KL = {}", sig7(kl));
    println!("detection bound = {}", sig7(detection));
    println!(
        "handicap bound (M = {}) = {}",
        args.num_unsafe,
        sig7(handicap)
    );
    println!("safety ratio level = {}", sig7(1.0 - c.alpha()));
    let dir = args.out.clone().unwrap_or_else(|| default_out("bounds"));
    let spec = json!({
        "mu": args.mu, "epsilon": args.eps, "alpha": args.alpha, "unsafe": args.num_unsafe,
        "values": {
            "lambda0": c.lambda0(), "lambda1": c.lambda1(), "log_threshold": c.log_threshold(),
            "kl_divergence": kl, "detection_time_bound": detection, "handicap_bound": handicap,
            "rho_bound": 1.0 - c.alpha(),
        }
    });
    write_metadata(&dir, "bounds", &spec, &[], &run_info(started, clock))?;
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> Result<(), SimError> {
    let started = now_secs();
    let clock = Instant::now();
    let c = SafetyConfig::new(args.mu, args.eps, args.alpha)
        .map_err(|e| SimError::Config(e.to_string()))?;
    if args.horizon == 0 {
        return Err(SimError::Config("--horizon must be at least 1".into()));
    }
    let mut env = BanditEnv::new(args.arms.clone(), args.seed)
        .map_err(|e| SimError::Config(format!("--arms: {e}")))?;
    let trace = run(
        &mut env,
        Algorithm::Relaxed(c),
        args.horizon,
        Recording::Full,
    )?;
    let rows = trace_rows(&trace, &GridPoint { config: Some(c) }, 0);
    let dir = args.out.clone().unwrap_or_else(|| default_out("trace"));
    std::fs::create_dir_all(&dir).map_err(|e| SimError::Io {
        path: dir.clone(),
        source: e,
    })?;
    write_csv(&dir.join("trace.csv"), &rows)?;
    let spec = json!({
        "arms": args.arms, "mu": args.mu, "epsilon": args.eps, "alpha": args.alpha,
        "seed": args.seed, "horizon": args.horizon,
    });
    write_metadata(
        &dir,
        "trace",
        &spec,
        &["trace.csv".to_owned()],
        &run_info(started, clock),
    )?;
    for (arm, a) in trace.arms.iter().enumerate() {
        match a.verdict {
            safety_inspector_core::Verdict::Discarded { at_pull } => println!(
                "arm {arm}: discarded at pull {at_pull} with {} zeros, log-likelihood {}",
                a.zeros,
                sig7(a.log_lik)
            ),
            safety_inspector_core::Verdict::Active => println!(
                "arm {arm}: still active after {} pulls, log-likelihood {}",
                a.pulls,
                sig7(a.log_lik)
            ),
        }
    }
    println!(
        "steps: {}; wrote {}",
        trace.len,
        dir.join("trace.csv").display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_experiment("simulate", a, cli.verbose),
        Command::Exp1(a) => cmd_experiment("exp1", a, cli.verbose),
        Command::Exp2(a) => cmd_experiment("exp2", a, cli.verbose),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
