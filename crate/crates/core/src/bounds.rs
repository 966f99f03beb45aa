//! Closed-form guarantees of the inspectors.

use crate::config::SafetyConfig;
use crate::error::{Error, Result};

/// `KL(f_mu || f_{mu+epsilon})` between the two Bernoulli laws of the test.
pub fn kl_divergence(config: &SafetyConfig) -> f64 {
    let mu = config.mu();
    let eps = config.epsilon();
    mu * libm::log(mu / (mu + eps)) + (1.0 - mu) * libm::log((1.0 - mu) / (1.0 - mu - eps))
}

/// Bound on the expected number of pulls before an arm with `mu_n <= mu` is
/// discarded: `1 + log(1/alpha) / KL`.
pub fn detection_time_bound(config: &SafetyConfig) -> f64 {
    1.0 + config.log_threshold() / kl_divergence(config)
}

/// Expected handicap bound of the relaxed inspector with `num_unsafe` unsafe arms.
pub fn handicap_bound_relaxed(config: &SafetyConfig, num_unsafe: usize) -> f64 {
    num_unsafe as f64 * detection_time_bound(config)
}

/// Expected testing-time bound `1/(1 - mu_n)^2` of the flawless inspector.
pub fn testing_time_bound_flawless(mu_n: f64) -> Result<f64> {
    if mu_n == 1.0 {
        return Err(Error::InvalidParameter {
            name: "mu_n",
            value: mu_n,
            reason: "flawless arms are never discarded; the bound is undefined",
        });
    }
    if !(0.0..1.0).contains(&mu_n) {
        return Err(Error::InvalidParameter {
            name: "mu_n",
            value: mu_n,
            reason: "must lie in [0, 1)",
        });
    }
    let gap = 1.0 - mu_n;
    Ok(1.0 / (gap * gap))
}

/// Sum of [`testing_time_bound_flawless`] over every arm with `mu_n < 1`.
pub fn handicap_bound_flawless(arm_means: &[f64]) -> Result<f64> {
    arm_means
        .iter()
        .filter(|&&m| m < 1.0)
        .map(|&m| testing_time_bound_flawless(m))
        .sum()
}
