//! Run traces: what happened at each step and to each arm.

use alloc::vec::Vec;

use crate::config::SafetyConfig;
use crate::sprt::Verdict;

/// Ground-truth label of an arm, from the simulator's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArmClass {
    /// Counts towards the handicap: `mu_n < mu`.
    Unsafe,
    /// `mu <= mu_n < mu + epsilon`: neither unsafe nor counted as safe.
    Gap,
    /// Counts towards the safety ratio: `mu_n >= mu + epsilon`.
    Safe,
}

/// Thresholds used to label arms. The flawless inspector uses `mu = 1`,
/// `epsilon = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labels {
    pub unsafe_below: f64,
    pub safe_at_least: f64,
}

// Absorbs the rounding in `mu + epsilon` (0.9 + 0.05 > 0.95 in binary).
const SAFE_TOLERANCE: f64 = 1e-12;

impl Labels {
    pub fn flawless() -> Self {
        Self {
            unsafe_below: 1.0,
            safe_at_least: 1.0,
        }
    }

    pub fn relaxed(config: &SafetyConfig) -> Self {
        Self {
            unsafe_below: config.mu(),
            safe_at_least: config.safe_mean(),
        }
    }

    pub fn classify(&self, mean: f64) -> ArmClass {
        if mean < self.unsafe_below {
            ArmClass::Unsafe
        } else if mean >= self.safe_at_least - SAFE_TOLERANCE {
            ArmClass::Safe
        } else {
            ArmClass::Gap
        }
    }
}

/// State after step `t` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    pub t: u64,
    pub arm: usize,
    pub outcome: bool,
    /// `|S_t|` after the step.
    pub active: usize,
    /// Safe arms still in the surviving set.
    pub active_safe: usize,
    /// Realized handicap: steps so far that selected an unsafe arm.
    pub handicap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmRecord {
    pub mean: f64,
    pub class: ArmClass,
    /// Testing time at discard or at the end of the run.
    pub pulls: u64,
    pub zeros: u64,
    pub log_lik: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub labels: Labels,
    pub horizon: u64,
    /// Steps executed; below `horizon` only if the surviving set emptied.
    pub len: u64,
    /// Kept steps, in increasing `t`, according to the recording mode.
    pub steps: Vec<StepRecord>,
    /// The final step, always kept.
    pub last: Option<StepRecord>,
    pub arms: Vec<ArmRecord>,
    /// Every arm was discarded before the horizon.
    pub exhausted: bool,
}

impl RunTrace {
    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn count(&self, class: ArmClass) -> usize {
        self.arms.iter().filter(|a| a.class == class).count()
    }

    /// `M`: arms counted by the handicap.
    pub fn num_unsafe(&self) -> usize {
        self.count(ArmClass::Unsafe)
    }

    pub fn num_gap(&self) -> usize {
        self.count(ArmClass::Gap)
    }

    pub fn num_safe(&self) -> usize {
        self.count(ArmClass::Safe)
    }

    /// Reached the horizon with arms still under test.
    pub fn censored(&self) -> bool {
        !self.exhausted
    }

    /// Unsafe arms still in the surviving set at the end of the run.
    pub fn unsafe_remaining(&self) -> usize {
        self.arms
            .iter()
            .filter(|a| a.class == ArmClass::Unsafe && !a.verdict.is_discarded())
            .count()
    }

    pub fn final_handicap(&self) -> u64 {
        self.last.map_or(0, |s| s.handicap)
    }

    pub fn final_active(&self) -> usize {
        self.last.map_or(self.num_arms(), |s| s.active)
    }

    pub fn final_active_safe(&self) -> usize {
        self.last.map_or(self.num_safe(), |s| s.active_safe)
    }

    /// Looks up the record of step `t`, if the recording mode kept it.
    pub fn step(&self, t: u64) -> Option<&StepRecord> {
        if let Some(last) = &self.last {
            if last.t == t {
                return Some(last);
            }
        }
        self.steps
            .binary_search_by_key(&t, |s| s.t)
            .ok()
            .map(|i| &self.steps[i])
    }
}
