//! Result files.
//!
//! All CSV files are UTF-8 with a header row, `.` as decimal separator and no
//! thousands separators. Floats are written in shortest round-trip form so
//! parsing a file gives back the in-memory values bit for bit. Empty cells
//! mean "undefined" (for example `alpha` of the flawless inspector, or a
//! safety ratio with no safe arms).
//!
//! | file                          | columns |
//! |-------------------------------|---------|
//! | `handicap_curve.csv`          | mu, epsilon, alpha, t, mean, stderr, bound |
//! | `rho_curve.csv`               | mu, epsilon, alpha, t, mean, stderr, bound |
//! | `testing_time_histogram.csv`  | mu, epsilon, alpha, bin_lo, bin_hi, count, bound, empirical_mean |
//! | `testing_times.csv`           | mu, epsilon, alpha, replication, arm, mean, class, pulls, zeros, discarded_at |
//! | `replications.csv`            | mu, epsilon, alpha, replication, seed, num_unsafe, num_gap, num_safe, steps, exhausted, unsafe_remaining, nhandicap_inf, rho_inf |
//! | `sweep.csv`                   | mu, epsilon, alpha, nhandicap_inf, nhandicap_inf_stderr, rho_inf, rho_inf_stderr, nhandicap_bound, rho_bound, testing_time_bound, testing_time_mean, censored_runs |
//! | `trace.csv`                   | mu, epsilon, alpha, replication, arm, pull, step, outcome, zeros, log_lik, log_threshold, zero_threshold, discarded |
//!
//! Curve `mean` is the normalized handicap (handicap / number of arms) or the
//! safety ratio; `bound` is the matching analytic bound. `metadata.json` holds
//! the resolved spec, the file list and, in its `run` block, the only
//! time-dependent fields.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use safety_inspector_core::sprt::zero_threshold;
use safety_inspector_core::{ArmState, RunTrace};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::experiment::{ResultSet, RunInfo};
use crate::spec::GridPoint;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub t: u64,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub bin_lo: u64,
    pub bin_hi: u64,
    pub count: usize,
    pub bound: Option<f64>,
    pub empirical_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingTimeRow {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub replication: usize,
    pub arm: usize,
    pub mean: f64,
    pub class: String,
    pub pulls: u64,
    pub zeros: u64,
    pub discarded_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
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
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub nhandicap_inf: f64,
    pub nhandicap_inf_stderr: f64,
    pub rho_inf: Option<f64>,
    pub rho_inf_stderr: Option<f64>,
    pub nhandicap_bound: f64,
    pub rho_bound: f64,
    pub testing_time_bound: Option<f64>,
    pub testing_time_mean: Option<f64>,
    pub censored_runs: usize,
}

/// One pull of one arm, in the order the pulls happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub mu: f64,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub replication: usize,
    pub arm: usize,
    /// Pull count of this arm after the pull.
    pub pull: u64,
    /// Global step.
    pub step: u64,
    pub outcome: u8,
    pub zeros: u64,
    pub log_lik: Option<f64>,
    pub log_threshold: Option<f64>,
    /// Zeros needed to discard at this pull count.
    pub zero_threshold: Option<f64>,
    /// 1 on the pull that discarded the arm.
    pub discarded: u8,
}

/// Replays a fully recorded trace into per-pull rows.
pub fn trace_rows(trace: &RunTrace, point: &GridPoint, replication: usize) -> Vec<TraceRow> {
    let mut arms = vec![ArmState::new(); trace.num_arms()];
    let mut rows = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        let state = &mut arms[s.arm];
        let discarded = match &point.config {
            Some(c) => {
                state
                    .update_log_lik(c, s.outcome)
                    .expect("recorded steps never touch a discarded arm");
                state.check_discard_count(c).is_discarded()
            }
            None => {
                state
                    .record(s.outcome)
                    .expect("recorded steps never touch a discarded arm");
                !s.outcome
            }
        };
        if discarded {
            state.discard();
        }
        rows.push(TraceRow {
            mu: point.mu(),
            epsilon: point.epsilon(),
            alpha: point.alpha(),
            replication,
            arm: s.arm,
            pull: state.pulls(),
            step: s.t,
            outcome: u8::from(s.outcome),
            zeros: state.zeros(),
            log_lik: point.config.map(|_| state.log_lik()),
            log_threshold: point.config.map(|c| c.log_threshold()),
            zero_threshold: point.config.map(|c| zero_threshold(state.pulls(), &c)),
            discarded: u8::from(discarded),
        });
    }
    rows
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))
}

/// Writes `rows` as a CSV file with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(SimError::from))
        .collect()
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    command: &'a str,
    spec: &'a serde_json::Value,
    files: &'a [String],
    run: &'a RunInfo,
}

/// Writes `metadata.json`: everything needed to reproduce the invocation.
pub fn write_metadata(
    dir: &Path,
    command: &str,
    spec: &serde_json::Value,
    files: &[String],
    run: &RunInfo,
) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join("metadata.json");
    let meta = Metadata {
        schema_version: SCHEMA_VERSION,
        command,
        spec,
        files,
        run,
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
    Ok(path)
}

pub fn curve_rows(results: &ResultSet) -> (Vec<CurveRow>, Vec<CurveRow>) {
    let mut handicap = Vec::new();
    let mut rho = Vec::new();
    for p in &results.points {
        for (i, &t) in p.checkpoints.iter().enumerate() {
            handicap.push(CurveRow {
                mu: p.mu,
                epsilon: p.epsilon,
                alpha: p.alpha,
                t,
                mean: Some(p.nhandicap[i].mean),
                stderr: Some(p.nhandicap[i].stderr),
                bound: Some(p.bounds.nhandicap),
            });
            rho.push(CurveRow {
                mu: p.mu,
                epsilon: p.epsilon,
                alpha: p.alpha,
                t,
                mean: p.rho[i].map(|s| s.mean),
                stderr: p.rho[i].map(|s| s.stderr),
                bound: Some(p.bounds.rho),
            });
        }
    }
    (handicap, rho)
}

pub fn sweep_rows(results: &ResultSet) -> Vec<SweepRow> {
    results
        .points
        .iter()
        .map(|p| SweepRow {
            mu: p.mu,
            epsilon: p.epsilon,
            alpha: p.alpha,
            nhandicap_inf: p.nhandicap_inf.mean,
            nhandicap_inf_stderr: p.nhandicap_inf.stderr,
            rho_inf: p.rho_inf.map(|s| s.mean),
            rho_inf_stderr: p.rho_inf.map(|s| s.stderr),
            nhandicap_bound: p.bounds.nhandicap,
            rho_bound: p.bounds.rho,
            testing_time_bound: p.bounds.testing_time,
            testing_time_mean: p.testing_time_mean,
            censored_runs: p.censored_runs,
        })
        .collect()
}

fn csv_files(results: &ResultSet, dir: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let mut put = |name: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        write(&dir.join(name))?;
        files.push(name.to_owned());
        Ok(())
    };
    let (handicap, rho) = curve_rows(results);
    put("handicap_curve.csv", &|p| write_csv(p, &handicap))?;
    put("rho_curve.csv", &|p| write_csv(p, &rho))?;

    let histogram: Vec<HistogramRow> = results
        .points
        .iter()
        .flat_map(|p| {
            p.histogram.iter().map(move |b| HistogramRow {
                mu: p.mu,
                epsilon: p.epsilon,
                alpha: p.alpha,
                bin_lo: b.lo,
                bin_hi: b.hi,
                count: b.count,
                bound: p.bounds.testing_time,
                empirical_mean: p.testing_time_mean,
            })
        })
        .collect();
    put("testing_time_histogram.csv", &|p| write_csv(p, &histogram))?;

    let arms: Vec<TestingTimeRow> = results
        .points
        .iter()
        .flat_map(|p| {
            p.replications.iter().flat_map(move |r| {
                r.arms
                    .iter()
                    .enumerate()
                    .map(move |(arm, a)| TestingTimeRow {
                        mu: p.mu,
                        epsilon: p.epsilon,
                        alpha: p.alpha,
                        replication: r.replication,
                        arm,
                        mean: a.mean,
                        class: a.class.clone(),
                        pulls: a.pulls,
                        zeros: a.zeros,
                        discarded_at: a.discarded_at,
                    })
            })
        })
        .collect();
    put("testing_times.csv", &|p| write_csv(p, &arms))?;

    let reps: Vec<ReplicationRow> = results
        .points
        .iter()
        .flat_map(|p| {
            p.replications.iter().map(move |r| ReplicationRow {
                mu: p.mu,
                epsilon: p.epsilon,
                alpha: p.alpha,
                replication: r.replication,
                seed: r.seed,
                num_unsafe: r.num_unsafe,
                num_gap: r.num_gap,
                num_safe: r.num_safe,
                steps: r.steps,
                exhausted: r.exhausted,
                unsafe_remaining: r.unsafe_remaining,
                nhandicap_inf: r.nhandicap_inf,
                rho_inf: r.rho_inf,
            })
        })
        .collect();
    put("replications.csv", &|p| write_csv(p, &reps))?;

    let sweep = sweep_rows(results);
    put("sweep.csv", &|p| write_csv(p, &sweep))?;

    let traces: Vec<TraceRow> = results
        .points
        .iter()
        .flat_map(|p| {
            p.replications
                .iter()
                .filter_map(|r| r.trace.as_ref())
                .flatten()
                .cloned()
        })
        .collect();
    if !traces.is_empty() {
        put("trace.csv", &|p| write_csv(p, &traces))?;
    }
    Ok(files)
}

#[derive(Serialize)]
struct JsonResults<'a> {
    spec: &'a crate::spec::ExperimentSpec,
    points: &'a [crate::experiment::PointResult],
}

/// Writes the result files and the metadata sidecar into `dir`; returns the
/// paths written.
pub fn emit(results: &ResultSet, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let files = match format {
        Format::Csv => csv_files(results, dir)?,
        Format::Json => {
            let path = dir.join("results.json");
            let file = File::create(&path).map_err(|e| SimError::io(&path, e))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer(
                &mut w,
                &JsonResults {
                    spec: &results.spec,
                    points: &results.points,
                },
            )?;
            w.write_all(b"\n").map_err(|e| SimError::io(&path, e))?;
            w.flush().map_err(|e| SimError::io(&path, e))?;
            vec!["results.json".to_owned()]
        }
    };
    let spec = serde_json::to_value(&results.spec)?;
    let meta = write_metadata(dir, "experiment", &spec, &files, &results.run)?;
    let mut paths: Vec<PathBuf> = files.iter().map(|f| dir.join(f)).collect();
    paths.push(meta);
    Ok(paths)
}
