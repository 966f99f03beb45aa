//! Per-arm accumulator of the one-sided SPRT.
//!
//! The log-likelihood ratio after `t` pulls with `k` zeros is
//! `k * lambda0 - (t - k) * lambda1`, and the arm is discarded once it reaches
//! `log(1/alpha)`. Rearranged over the counts the same rule reads
//!
//! ```text
//! k >= (log A + lambda1 * t) / (lambda0 + lambda1)
//! ```
//!
//! which is what the inspectors evaluate: the counts are exact, the running
//! float is kept for traces only.

use crate::config::SafetyConfig;
use crate::error::{Error, Result};

/// Outcome of an arm's test so far. `Discarded` is absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Verdict {
    #[default]
    Active,
    Discarded {
        at_pull: u64,
    },
}

impl Verdict {
    pub fn is_discarded(&self) -> bool {
        matches!(self, Verdict::Discarded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmState {
    pulls: u64,
    zeros: u64,
    log_lik: f64,
    verdict: Verdict,
}

impl ArmState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Active state whose log-likelihood is rebuilt exactly from the counts.
    pub fn from_counts(pulls: u64, zeros: u64, config: &SafetyConfig) -> Result<Self> {
        if zeros > pulls {
            return Err(Error::InvalidParameter {
                name: "zeros",
                value: zeros as f64,
                reason: "cannot exceed the number of pulls",
            });
        }
        Ok(Self {
            pulls,
            zeros,
            log_lik: log_lik_from_counts(pulls, zeros, config),
            verdict: Verdict::Active,
        })
    }

    /// Number of times the arm was tested, `T_n`.
    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn zeros(&self) -> u64 {
        self.zeros
    }

    pub fn ones(&self) -> u64 {
        self.pulls - self.zeros
    }

    /// Running log-likelihood ratio, accumulated one observation at a time.
    pub fn log_lik(&self) -> f64 {
        self.log_lik
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn is_active(&self) -> bool {
        !self.verdict.is_discarded()
    }

    /// Records one return (`true` for `X = 1`) and moves the log-likelihood by
    /// `+lambda0` for a zero or `-lambda1` for a one.
    pub fn update_log_lik(&mut self, config: &SafetyConfig, outcome: bool) -> Result<()> {
        self.record(outcome)?;
        if outcome {
            self.log_lik -= config.lambda1();
        } else {
            self.log_lik += config.lambda0();
        }
        Ok(())
    }

    /// Records one return without a likelihood; used by the flawless
    /// inspector, which discards on the first zero.
    pub fn record(&mut self, outcome: bool) -> Result<()> {
        if let Verdict::Discarded { at_pull } = self.verdict {
            return Err(Error::UpdateAfterDiscard { at_pull });
        }
        self.pulls += 1;
        if !outcome {
            self.zeros += 1;
        }
        Ok(())
    }

    /// Freezes the arm at its current pull count.
    pub fn discard(&mut self) -> Verdict {
        if self.is_active() {
            self.verdict = Verdict::Discarded {
                at_pull: self.pulls,
            };
        }
        self.verdict
    }

    /// Threshold test on the running log-likelihood: `log_lik >= log A`.
    pub fn check_discard_loglik(&self, config: &SafetyConfig) -> Verdict {
        if self.log_lik >= config.log_threshold() {
            Verdict::Discarded {
                at_pull: self.pulls,
            }
        } else {
            Verdict::Active
        }
    }

    /// Count form of the same test; authoritative for the inspectors.
    pub fn check_discard_count(&self, config: &SafetyConfig) -> Verdict {
        check_discard_count(self.pulls, self.zeros, config)
    }
}

/// `zeros * lambda0 - (pulls - zeros) * lambda1`.
pub fn log_lik_from_counts(pulls: u64, zeros: u64, config: &SafetyConfig) -> f64 {
    zeros as f64 * config.lambda0() - (pulls - zeros) as f64 * config.lambda1()
}

/// Minimum number of zeros that discards an arm after `pulls` pulls, as a real.
pub fn zero_threshold(pulls: u64, config: &SafetyConfig) -> f64 {
    (config.log_threshold() + config.lambda1() * pulls as f64)
        / (config.lambda0() + config.lambda1())
}

/// Discard iff `zeros >= (log A + lambda1 * pulls) / (lambda0 + lambda1)`.
pub fn check_discard_count(pulls: u64, zeros: u64, config: &SafetyConfig) -> Verdict {
    debug_assert!(zeros <= pulls);
    if zeros as f64 >= zero_threshold(pulls, config) {
        Verdict::Discarded { at_pull: pulls }
    } else {
        Verdict::Active
    }
}
