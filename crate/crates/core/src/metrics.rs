//! Handicap, safety ratio and testing time, plus replication summaries.
//!
//! * handicap at `t`: number of steps `<= t` that selected an arm with
//!   `mu_n < mu`;
//! * safety ratio at `t`: fraction of arms with `mu_n >= mu + epsilon` still in
//!   the surviving set, undefined when there are none;
//! * testing time of arm `n`: number of times it was selected.
//!
//! Expectations are estimated by averaging over replications with
//! [`Summary`]; a single run never stands in for an expectation.

use alloc::vec::Vec;

use crate::bounds::{detection_time_bound, handicap_bound_flawless, handicap_bound_relaxed};
use crate::config::SafetyConfig;
use crate::error::{Error, Result};
use crate::trace::{ArmClass, Labels, RunTrace};

fn check_t(trace: &RunTrace, t: u64) -> Result<()> {
    if t > trace.len {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t as f64,
            reason: "beyond the end of the trace",
        });
    }
    Ok(())
}

/// Realized handicap after `t` steps.
pub fn handicap(trace: &RunTrace, t: u64) -> Result<u64> {
    check_t(trace, t)?;
    if t == 0 {
        return Ok(0);
    }
    trace
        .step(t)
        .map(|s| s.handicap)
        .ok_or(Error::StepNotRecorded { t })
}

/// Handicap divided by the number of arms.
pub fn normalized_handicap(trace: &RunTrace, t: u64) -> Result<f64> {
    Ok(handicap(trace, t)? as f64 / trace.num_arms() as f64)
}

/// Safety ratio `rho_t`.
pub fn safety_ratio(trace: &RunTrace, t: u64) -> Result<f64> {
    let safe = trace.num_safe();
    if safe == 0 {
        return Err(Error::NoSafeArms);
    }
    check_t(trace, t)?;
    let kept = if t == 0 {
        safe
    } else {
        trace
            .step(t)
            .map(|s| s.active_safe)
            .ok_or(Error::StepNotRecorded { t })?
    };
    Ok(kept as f64 / safe as f64)
}

/// Testing time `T_n` at discard or at the end of the run.
pub fn testing_time(trace: &RunTrace, arm: usize) -> Result<u64> {
    trace
        .arms
        .get(arm)
        .map(|a| a.pulls)
        .ok_or(Error::IndexOutOfRange {
            index: arm,
            len: trace.num_arms(),
        })
}

/// Testing time `T_n(t)` after `t` steps; needs a fully recorded trace.
pub fn testing_time_at(trace: &RunTrace, arm: usize, t: u64) -> Result<u64> {
    testing_time(trace, arm)?;
    check_t(trace, t)?;
    if t == 0 {
        return Ok(0);
    }
    if trace.steps.len() as u64 != trace.len {
        return Err(Error::StepNotRecorded { t });
    }
    Ok(trace.steps[..t as usize]
        .iter()
        .filter(|s| s.arm == arm)
        .count() as u64)
}

/// Analytic bounds to draw next to empirical curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOverlay {
    pub num_unsafe: usize,
    /// Bound on the expected handicap.
    pub handicap: f64,
    /// Safety-ratio level `1 - alpha` (1 for the flawless inspector).
    pub rho: f64,
    /// Per-arm bound on the expected testing time; `None` for the flawless
    /// inspector, whose bound differs per arm.
    pub testing_time: Option<f64>,
}

/// Bounds of the relaxed inspector for the given ground truth.
pub fn bound_overlay(config: &SafetyConfig, means: &[f64]) -> BoundOverlay {
    let labels = Labels::relaxed(config);
    let num_unsafe = means
        .iter()
        .filter(|&&m| labels.classify(m) == ArmClass::Unsafe)
        .count();
    BoundOverlay {
        num_unsafe,
        handicap: handicap_bound_relaxed(config, num_unsafe),
        rho: 1.0 - config.alpha(),
        testing_time: Some(detection_time_bound(config)),
    }
}

/// Bounds of the flawless inspector for the given ground truth.
pub fn bound_overlay_flawless(means: &[f64]) -> Result<BoundOverlay> {
    Ok(BoundOverlay {
        num_unsafe: means.iter().filter(|&&m| m < 1.0).count(),
        handicap: handicap_bound_flawless(means)?,
        rho: 1.0,
        testing_time: None,
    })
}

/// Mean, standard error and envelope of replicated values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 for a single value.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// `None` for an empty slice. Values are summed in order, so equal inputs
    /// give bit-identical summaries.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            libm::sqrt(var / n as f64)
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            n,
            mean,
            stderr,
            min,
            max,
        })
    }
}

/// Collects one value per replication and summarizes them.
pub fn summarize<I: IntoIterator<Item = f64>>(values: I) -> Option<Summary> {
    let v: Vec<f64> = values.into_iter().collect();
    Summary::of(&v)
}
