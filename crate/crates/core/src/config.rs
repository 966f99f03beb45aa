//! Test design `(mu, epsilon, alpha)` and its derived constants.

use crate::error::{Error, Result};

/// Design of the one-sided SPRT.
///
/// `lambda0` is the log-likelihood increment for an observed zero and
/// `lambda1` the decrement for an observed one:
///
/// ```text
/// lambda0 = log((1 - mu) / (1 - mu - epsilon))
/// lambda1 = log((mu + epsilon) / mu)
/// log_threshold = log(1 / alpha)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyConfig {
    mu: f64,
    epsilon: f64,
    alpha: f64,
    lambda0: f64,
    lambda1: f64,
    log_threshold: f64,
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}

impl SafetyConfig {
    /// Requires `0 < mu < 1`, `0 < alpha < 1`, `epsilon > 0` and `mu + epsilon < 1`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(mu: f64, epsilon: f64, alpha: f64) -> Result<Self> {
        // Negated comparisons also reject NaN.
        if !(mu > 0.0 && mu < 1.0) {
            return Err(invalid("mu", mu, "must lie in (0, 1)"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", alpha, "must lie in (0, 1)"));
        }
        if !(epsilon > 0.0) {
            return Err(invalid("epsilon", epsilon, "must be positive"));
        }
        if !(mu + epsilon < 1.0) {
            return Err(invalid("epsilon", epsilon, "mu + epsilon must be below 1"));
        }
        let lambda0 = libm::log((1.0 - mu) / (1.0 - mu - epsilon));
        let lambda1 = libm::log((mu + epsilon) / mu);
        let log_threshold = libm::log(1.0 / alpha);
        // Rounding can flatten a vanishing slack to zero.
        if !(lambda0 > 0.0 && lambda1 > 0.0) {
            return Err(invalid(
                "epsilon",
                epsilon,
                "too small to separate the hypotheses",
            ));
        }
        let config = Self {
            mu,
            epsilon,
            alpha,
            lambda0,
            lambda1,
            log_threshold,
        };
        if !(crate::bounds::kl_divergence(&config) > 0.0) {
            return Err(invalid(
                "epsilon",
                epsilon,
                "too small to separate the hypotheses",
            ));
        }
        Ok(config)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// `log A` with `A = 1/alpha`.
    pub fn log_threshold(&self) -> f64 {
        self.log_threshold
    }

    /// Smallest mean that counts as safe for the safety ratio.
    pub fn safe_mean(&self) -> f64 {
        self.mu + self.epsilon
    }
}
