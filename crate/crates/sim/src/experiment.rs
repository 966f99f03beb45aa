//! Replicated runs over a parameter grid.
//!
//! Replication `r` gets the seed `derive_seed(master_seed, [r])`. The arm means
//! and every random stream of that replication derive from it, so all grid
//! points of one replication face the same bandit and the same outcome
//! streams, and results never depend on execution order or worker count.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use safety_inspector_core::metrics::{bound_overlay, bound_overlay_flawless, Summary};
use safety_inspector_core::seed::derive_seed;
use safety_inspector_core::{
    run, Algorithm, ArmClass, ArmSelector, BanditEnv, GreedyMean, Recording, RunTrace,
    SafetyConfig, UniformSelector, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::output::{self, trace_rows, Format, TraceRow};
use crate::spec::{AlgorithmSpec, ExperimentSpec, GridPoint, PolicyName};

/// Serializable mirror of [`Summary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl From<Summary> for Stat {
    fn from(s: Summary) -> Self {
        Self {
            n: s.n,
            mean: s.mean,
            stderr: s.stderr,
            min: s.min,
            max: s.max,
        }
    }
}

fn stat(values: &[f64]) -> Option<Stat> {
    Summary::of(values).map(Stat::from)
}

pub(crate) fn class_name(class: ArmClass) -> &'static str {
    match class {
        ArmClass::Unsafe => "unsafe",
        ArmClass::Gap => "gap",
        ArmClass::Safe => "safe",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmOutcome {
    pub mean: f64,
    pub class: String,
    pub pulls: u64,
    pub zeros: u64,
    pub discarded_at: Option<u64>,
}

/// State at one curve checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSample {
    pub handicap: u64,
    pub active: usize,
    pub active_safe: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub num_unsafe: usize,
    pub num_gap: usize,
    pub num_safe: usize,
    pub steps: u64,
    pub exhausted: bool,
    pub unsafe_remaining: usize,
    pub nhandicap_inf: f64,
    pub rho_inf: Option<f64>,
    /// Bound on the expected handicap for this replication's arms.
    pub handicap_bound: f64,
    pub curve: Vec<CurveSample>,
    pub arms: Vec<ArmOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointBounds {
    /// Normalized handicap bound, averaged over the replications' arm draws.
    pub nhandicap: f64,
    pub rho: f64,
    pub testing_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive.
    pub lo: u64,
    /// Exclusive.
    pub hi: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub checkpoints: Vec<u64>,
    pub nhandicap: Vec<Stat>,
    pub rho: Vec<Option<Stat>>,
    pub active: Vec<Stat>,
    pub nhandicap_inf: Stat,
    pub rho_inf: Option<Stat>,
    pub bounds: PointBounds,
    /// Testing times of unsafe arms that were discarded, over all replications.
    pub testing_times: Vec<u64>,
    pub testing_time_mean: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    /// Replications that ended with an unsafe arm still under test.
    pub censored_runs: usize,
    pub replications: Vec<ReplicationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub code_version: String,
    pub started_unix_secs: u64,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub spec: ExperimentSpec,
    pub points: Vec<PointResult>,
    pub run: RunInfo,
}

/// Checkpoints `stride, 2 * stride, ...` ending exactly at `horizon`.
pub fn checkpoints(horizon: u64, count: u64) -> Vec<u64> {
    let stride = horizon.div_ceil(count.max(1)).max(1);
    let mut ts: Vec<u64> = (1..)
        .map(|k| k * stride)
        .take_while(|&t| t <= horizon)
        .collect();
    if ts.last() != Some(&horizon) {
        ts.push(horizon);
    }
    ts
}

fn sample(trace: &RunTrace, t: u64) -> CurveSample {
    let rec = if t >= trace.len {
        trace.last
    } else {
        trace.step(t).copied()
    };
    match rec {
        Some(s) => CurveSample {
            handicap: s.handicap,
            active: s.active,
            active_safe: s.active_safe,
        },
        None => CurveSample {
            handicap: 0,
            active: trace.num_arms(),
            active_safe: trace.num_safe(),
        },
    }
}

fn run_one(
    spec: &ExperimentSpec,
    point: &GridPoint,
    replication: usize,
    ts: &[u64],
) -> Result<ReplicationRecord> {
    let seed = derive_seed(spec.master_seed, &[replication as u64]);
    let means = spec.draw_means(derive_seed(seed, &[0]));
    let mut env = BanditEnv::new(means.clone(), derive_seed(seed, &[1]))?;
    let stride = ts.first().copied().unwrap_or(1);
    let recording = if spec.record_trace && replication == 0 {
        Recording::Full
    } else {
        Recording::Every(stride)
    };
    let mut uniform = UniformSelector;
    let mut greedy = GreedyMean;
    let algorithm = match (spec.algorithm, point.config) {
        (AlgorithmSpec::Flawless, _) => Algorithm::Flawless,
        (AlgorithmSpec::Relaxed, Some(c)) => Algorithm::Relaxed(c),
        (AlgorithmSpec::Filtered { policy }, Some(c)) => {
            let selector: &mut dyn ArmSelector = match policy {
                PolicyName::Uniform => &mut uniform,
                PolicyName::Greedy => &mut greedy,
            };
            Algorithm::Filtered(c, selector)
        }
        (_, None) => return Err(SimError::Config("grid point lacks a test design".into())),
    };
    let trace = run(&mut env, algorithm, spec.horizon, recording)?;
    let num_safe = trace.num_safe();
    let handicap_bound = match &point.config {
        Some(c) => bound_overlay(c, &means).handicap,
        None => bound_overlay_flawless(&means)?.handicap,
    };
    let rows =
        (spec.record_trace && replication == 0).then(|| trace_rows(&trace, point, replication));
    Ok(ReplicationRecord {
        replication,
        seed,
        num_unsafe: trace.num_unsafe(),
        num_gap: trace.num_gap(),
        num_safe,
        steps: trace.len,
        exhausted: trace.exhausted,
        unsafe_remaining: trace.unsafe_remaining(),
        nhandicap_inf: trace.final_handicap() as f64 / trace.num_arms() as f64,
        rho_inf: (num_safe > 0).then(|| trace.final_active_safe() as f64 / num_safe as f64),
        handicap_bound,
        curve: ts.iter().map(|&t| sample(&trace, t)).collect(),
        arms: trace
            .arms
            .iter()
            .map(|a| ArmOutcome {
                mean: a.mean,
                class: class_name(a.class).to_owned(),
                pulls: a.pulls,
                zeros: a.zeros,
                discarded_at: match a.verdict {
                    Verdict::Discarded { at_pull } => Some(at_pull),
                    Verdict::Active => None,
                },
            })
            .collect(),
        trace: rows,
    })
}

fn histogram(values: &[u64], bins: usize) -> Vec<HistogramBin> {
    let Some(&max) = values.iter().max() else {
        return Vec::new();
    };
    let width = (max + 1).div_ceil(bins as u64).max(1);
    let n = (max + 1).div_ceil(width) as usize;
    let mut out: Vec<HistogramBin> = (0..n as u64)
        .map(|k| HistogramBin {
            lo: k * width,
            hi: (k + 1) * width,
            count: 0,
        })
        .collect();
    for &v in values {
        out[(v / width) as usize].count += 1;
    }
    out
}

fn aggregate(
    spec: &ExperimentSpec,
    point: &GridPoint,
    ts: Vec<u64>,
    reps: Vec<ReplicationRecord>,
) -> PointResult {
    let n_arms = spec.arms as f64;
    let nhandicap = (0..ts.len())
        .map(|i| {
            let v: Vec<f64> = reps
                .iter()
                .map(|r| r.curve[i].handicap as f64 / n_arms)
                .collect();
            stat(&v).expect("at least one replication")
        })
        .collect();
    let rho = (0..ts.len())
        .map(|i| {
            let v: Vec<f64> = reps
                .iter()
                .filter(|r| r.num_safe > 0)
                .map(|r| r.curve[i].active_safe as f64 / r.num_safe as f64)
                .collect();
            stat(&v)
        })
        .collect();
    let active = (0..ts.len())
        .map(|i| {
            let v: Vec<f64> = reps.iter().map(|r| r.curve[i].active as f64).collect();
            stat(&v).expect("at least one replication")
        })
        .collect();
    let nh_inf: Vec<f64> = reps.iter().map(|r| r.nhandicap_inf).collect();
    let rho_inf: Vec<f64> = reps.iter().filter_map(|r| r.rho_inf).collect();
    let bound_nh: Vec<f64> = reps.iter().map(|r| r.handicap_bound / n_arms).collect();
    let testing_times: Vec<u64> = reps
        .iter()
        .flat_map(|r| {
            r.arms
                .iter()
                .filter(|a| a.class == "unsafe")
                .filter_map(|a| a.discarded_at)
        })
        .collect();
    let testing_time_mean = (!testing_times.is_empty())
        .then(|| testing_times.iter().map(|&t| t as f64).sum::<f64>() / testing_times.len() as f64);
    let bounds = PointBounds {
        nhandicap: stat(&bound_nh).map_or(0.0, |s| s.mean),
        rho: point.alpha().map_or(1.0, |a| 1.0 - a),
        testing_time: point
            .config
            .as_ref()
            .map(safety_inspector_core::detection_time_bound),
    };
    PointResult {
        mu: point.mu(),
        epsilon: point.epsilon(),
        alpha: point.alpha(),
        checkpoints: ts,
        nhandicap,
        rho,
        active,
        nhandicap_inf: stat(&nh_inf).expect("at least one replication"),
        rho_inf: stat(&rho_inf),
        bounds,
        histogram: histogram(&testing_times, spec.histogram_bins),
        testing_times,
        testing_time_mean,
        censored_runs: reps.iter().filter(|r| r.unsafe_remaining > 0).count(),
        replications: reps,
    }
}

/// Maps `f` over `0..runs` on a worker pool, keeping index order.
pub fn replicate<T, F>(runs: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| (0..runs).into_par_iter().map(f).collect()))
}

/// Runs every replication at every grid point and, when the spec names an
/// output directory, writes the CSV files there.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultSet> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let points = spec.grid_points()?;
    let ts = checkpoints(spec.horizon, spec.checkpoints);
    let reps = spec.replications;
    let jobs = points.len() * reps;
    let records = replicate(jobs, spec.workers, |job| {
        run_one(spec, &points[job / reps], job % reps, &ts)
    })?;
    let mut records = records.into_iter();
    let mut results = Vec::with_capacity(points.len());
    for point in &points {
        let reps: Vec<ReplicationRecord> = records.by_ref().take(reps).collect::<Result<_>>()?;
        results.push(aggregate(spec, point, ts.clone(), reps));
    }
    let result = ResultSet {
        spec: spec.clone(),
        points: results,
        run: RunInfo {
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            started_unix_secs: started
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_time_secs: clock.elapsed().as_secs_f64(),
        },
    };
    if let Some(dir) = &spec.output {
        output::emit(&result, dir, Format::Csv)?;
    }
    Ok(result)
}

/// [`run_experiment`] for an `epsilon x alpha` sweep of the relaxed or
/// filtered inspector.
pub fn sweep(spec: &ExperimentSpec) -> Result<ResultSet> {
    if spec.algorithm == AlgorithmSpec::Flawless {
        return Err(SimError::Config(
            "a sweep needs the relaxed or filtered algorithm".into(),
        ));
    }
    run_experiment(spec)
}

impl PointResult {
    pub fn config(&self) -> Option<SafetyConfig> {
        self.alpha
            .and_then(|a| SafetyConfig::new(self.mu, self.epsilon, a).ok())
    }
}
