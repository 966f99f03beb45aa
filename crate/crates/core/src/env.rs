//! Simulated Bernoulli bandit.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hidden truth of a bandit: one Bernoulli mean per arm.
///
/// Every arm draws from its own ChaCha8 stream (stream `arm + 1` of the seed)
/// and arm selection uses stream `0`. The outcome sequence of an arm therefore
/// does not depend on when, or how often, the other arms are pulled.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    means: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
    selection: ChaCha8Rng,
    seed: u64,
}

impl BanditEnv {
    pub fn new(means: Vec<f64>, seed: u64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidParameter {
                name: "arms",
                value: 0.0,
                reason: "at least one arm is required",
            });
        }
        if let Some(&bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidParameter {
                name: "mu_n",
                value: bad,
                reason: "arm means must lie in [0, 1]",
            });
        }
        let base = ChaCha8Rng::seed_from_u64(seed);
        let streams = (0..means.len())
            .map(|arm| {
                let mut rng = base.clone();
                rng.set_stream(arm as u64 + 1);
                rng
            })
            .collect();
        let mut selection = base;
        selection.set_stream(0);
        Ok(Self {
            means,
            streams,
            selection,
            seed,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Operates `arm`; `true` is a safe result (`X = 1`).
    pub fn pull(&mut self, arm: usize) -> Result<bool> {
        let len = self.means.len();
        let mean = *self
            .means
            .get(arm)
            .ok_or(Error::IndexOutOfRange { index: arm, len })?;
        // gen::<f64>() lies in [0, 1): mean 1 always succeeds, mean 0 never does.
        Ok(self.streams[arm].gen::<f64>() < mean)
    }

    /// Random source for arm selection, independent of every arm stream.
    pub fn selection_rng(&mut self) -> &mut dyn RngCore {
        &mut self.selection
    }
}
