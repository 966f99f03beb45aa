//! The flawless and relaxed safety inspectors, and the safety filter.
//!
//! Both inspectors keep a surviving set `S_t`, starting with every arm, pick
//! an arm uniformly from it, observe the return and possibly remove the arm:
//!
//! * flawless: remove on the first zero;
//! * relaxed: feed the return to the arm's SPRT and remove once it fires.
//!
//! The filter keeps the relaxed gate but delegates selection to an arbitrary
//! [`ArmSelector`]. To keep every surviving arm under test it overrides the
//! policy whenever an arm has gone unpulled for `N` consecutive steps.

use alloc::vec::Vec;

use crate::config::SafetyConfig;
use crate::env::BanditEnv;
use crate::error::{Error, Result};
use crate::policy::{uniform_pick, ArmSelector, SelectionView};
use crate::sprt::ArmState;
use crate::trace::{ArmClass, ArmRecord, Labels, RunTrace, StepRecord};

#[derive(Debug, Clone)]
pub struct Inspector {
    arms: Vec<ArmState>,
    classes: Vec<ArmClass>,
    active: Vec<usize>,
    // Step at which each arm was last pulled; 0 before its first pull.
    last_pull: Vec<u64>,
    t: u64,
    handicap: u64,
    active_safe: usize,
}

#[derive(Debug, Clone, Copy)]
enum Gate<'a> {
    FirstZero,
    Sprt(&'a SafetyConfig),
}

impl Inspector {
    /// Fresh inspector over every arm of `env`; `labels` only feed the metrics.
    pub fn new(env: &BanditEnv, labels: Labels) -> Self {
        let n = env.num_arms();
        let classes: Vec<ArmClass> = env.means().iter().map(|&m| labels.classify(m)).collect();
        let active_safe = classes.iter().filter(|&&c| c == ArmClass::Safe).count();
        Self {
            arms: alloc::vec![ArmState::new(); n],
            classes,
            active: (0..n).collect(),
            last_pull: alloc::vec![0; n],
            t: 0,
            handicap: 0,
            active_safe,
        }
    }

    /// Surviving set in increasing index order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn classes(&self) -> &[ArmClass] {
        &self.classes
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn handicap(&self) -> u64 {
        self.handicap
    }

    pub fn active_safe(&self) -> usize {
        self.active_safe
    }

    /// One step of the flawless inspector.
    pub fn step_flawless(&mut self, env: &mut BanditEnv) -> Result<StepRecord> {
        let arm = self.pick_uniform(env)?;
        self.apply(env, arm, Gate::FirstZero)
    }

    /// One step of the relaxed inspector.
    pub fn step_relaxed(
        &mut self,
        env: &mut BanditEnv,
        config: &SafetyConfig,
    ) -> Result<StepRecord> {
        let arm = self.pick_uniform(env)?;
        self.apply(env, arm, Gate::Sprt(config))
    }

    /// One step of the relaxed gate around `policy`.
    pub fn step_filtered(
        &mut self,
        env: &mut BanditEnv,
        config: &SafetyConfig,
        policy: &mut dyn ArmSelector,
    ) -> Result<StepRecord> {
        if self.active.is_empty() {
            return Err(Error::EmptySurvivingSet);
        }
        let arm = match self.overdue_arm() {
            Some(arm) => arm,
            None => {
                let view = SelectionView {
                    active: &self.active,
                    arms: &self.arms,
                    t: self.t,
                };
                let arm = policy.select(&view, env.selection_rng());
                if arm >= self.arms.len() || !self.arms[arm].is_active() {
                    return Err(Error::PolicyViolation { arm });
                }
                arm
            }
        };
        self.apply(env, arm, Gate::Sprt(config))
    }

    fn pick_uniform(&self, env: &mut BanditEnv) -> Result<usize> {
        if self.active.is_empty() {
            return Err(Error::EmptySurvivingSet);
        }
        Ok(uniform_pick(&self.active, env.selection_rng()))
    }

    // Longest-waiting surviving arm that went unpulled for the last N steps.
    fn overdue_arm(&self) -> Option<usize> {
        let n = self.arms.len() as u64;
        self.active
            .iter()
            .copied()
            .filter(|&a| self.last_pull[a] + n <= self.t)
            .min_by_key(|&a| self.last_pull[a])
    }

    fn apply(&mut self, env: &mut BanditEnv, arm: usize, gate: Gate<'_>) -> Result<StepRecord> {
        let outcome = env.pull(arm)?;
        let state = &mut self.arms[arm];
        let discard = match gate {
            Gate::FirstZero => {
                state.record(outcome)?;
                !outcome
            }
            Gate::Sprt(config) => {
                state.update_log_lik(config, outcome)?;
                state.check_discard_count(config).is_discarded()
            }
        };
        if discard {
            state.discard();
            if let Ok(pos) = self.active.binary_search(&arm) {
                self.active.remove(pos);
            }
            if self.classes[arm] == ArmClass::Safe {
                self.active_safe -= 1;
            }
        }
        self.t += 1;
        self.last_pull[arm] = self.t;
        if self.classes[arm] == ArmClass::Unsafe {
            self.handicap += 1;
        }
        Ok(StepRecord {
            t: self.t,
            arm,
            outcome,
            active: self.active.len(),
            active_safe: self.active_safe,
            handicap: self.handicap,
        })
    }
}

/// Which inspector to run.
pub enum Algorithm<'a> {
    Flawless,
    Relaxed(SafetyConfig),
    Filtered(SafetyConfig, &'a mut dyn ArmSelector),
}

impl Algorithm<'_> {
    pub fn labels(&self) -> Labels {
        match self {
            Algorithm::Flawless => Labels::flawless(),
            Algorithm::Relaxed(c) | Algorithm::Filtered(c, _) => Labels::relaxed(c),
        }
    }
}

/// Which steps a trace keeps. The final step is always kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    Full,
    /// Steps whose index is a multiple of the stride.
    Every(u64),
    Final,
}

impl Recording {
    fn keeps(&self, t: u64) -> bool {
        match *self {
            Recording::Full => true,
            Recording::Every(stride) => stride > 0 && t.is_multiple_of(stride),
            Recording::Final => false,
        }
    }
}

/// Runs an inspector for up to `horizon` steps, stopping early only if every
/// arm has been discarded.
pub fn run(
    env: &mut BanditEnv,
    mut algorithm: Algorithm<'_>,
    horizon: u64,
    recording: Recording,
) -> Result<RunTrace> {
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let labels = algorithm.labels();
    let mut inspector = Inspector::new(env, labels);
    let mut steps = Vec::new();
    let mut last = None;
    while inspector.t() < horizon && !inspector.active().is_empty() {
        let record = match &mut algorithm {
            Algorithm::Flawless => inspector.step_flawless(env)?,
            Algorithm::Relaxed(c) => inspector.step_relaxed(env, c)?,
            Algorithm::Filtered(c, policy) => inspector.step_filtered(env, c, &mut **policy)?,
        };
        if recording.keeps(record.t) {
            steps.push(record);
        }
        last = Some(record);
    }
    let config = match &algorithm {
        Algorithm::Flawless => None,
        Algorithm::Relaxed(c) | Algorithm::Filtered(c, _) => Some(*c),
    };
    let arms = inspector
        .arms()
        .iter()
        .zip(env.means())
        .zip(inspector.classes())
        .map(|((s, &mean), &class)| ArmRecord {
            mean,
            class,
            pulls: s.pulls(),
            zeros: s.zeros(),
            log_lik: config.map_or(0.0, |_| s.log_lik()),
            verdict: s.verdict(),
        })
        .collect();
    Ok(RunTrace {
        labels,
        horizon,
        len: inspector.t(),
        steps,
        last,
        arms,
        exhausted: inspector.active().is_empty(),
    })
}
