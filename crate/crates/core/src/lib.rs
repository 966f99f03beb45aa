//! One-sided sequential probability ratio test for discarding unsafe arms of a
//! Bernoulli multi-armed bandit.
//!
//! An arm returns `1` (a safe result) with unknown probability `mu_n`. Each arm
//! runs its own one-sided SPRT between `H0: mu_n >= mu + epsilon` and
//! `H1: mu_n <= mu`; the test can only ever reject `H0` and discard the arm.
//! With threshold `A = 1/alpha`, arms with `mu_n <= mu` are discarded almost
//! surely after an expected number of pulls bounded by
//! `1 + log(1/alpha) / KL(f_mu || f_{mu+epsilon})`, and arms with
//! `mu_n >= mu + epsilon` survive with probability at least `1 - alpha`.
//!
//! The crate is `no_std` (with `alloc`). It carries:
//!
//! * [`config`] and [`sprt`]: the test design and the per-arm accumulator,
//! * [`bounds`]: closed-form detection, handicap and testing-time bounds,
//! * [`env`], [`policy`] and [`inspector`]: the simulated bandit and the two
//!   inspector algorithms (flawless and relaxed) plus a safety filter around an
//!   arbitrary selection policy,
//! * [`trace`] and [`metrics`]: run traces, handicap, safety ratio and testing
//!   time accounting.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod config;
pub mod env;
mod error;
pub mod inspector;
pub mod metrics;
pub mod policy;
pub mod seed;
pub mod sprt;
pub mod trace;

pub use bounds::{
    detection_time_bound, handicap_bound_flawless, handicap_bound_relaxed, kl_divergence,
    testing_time_bound_flawless,
};
pub use config::SafetyConfig;
pub use env::BanditEnv;
pub use error::{Error, Result};
pub use inspector::{run, Algorithm, Inspector, Recording};
pub use policy::{ArmSelector, FixedArm, GreedyMean, SelectionView, UniformSelector};
pub use sprt::{check_discard_count, ArmState, Verdict};
pub use trace::{ArmClass, ArmRecord, Labels, RunTrace, StepRecord};
