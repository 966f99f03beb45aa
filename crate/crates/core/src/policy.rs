//! Selection policies that the safety filter can wrap.

use rand::{Rng, RngCore};

use crate::sprt::ArmState;

/// What a wrapped policy may look at when choosing the next arm.
#[derive(Debug, Clone, Copy)]
pub struct SelectionView<'a> {
    /// Surviving arms in increasing index order; never empty.
    pub active: &'a [usize],
    /// Test state of every arm, discarded ones included.
    pub arms: &'a [ArmState],
    /// Steps taken so far.
    pub t: u64,
}

/// An arbitrary arm-selection rule. The filter rejects any index outside
/// `view.active` with [`Error::PolicyViolation`](crate::Error::PolicyViolation).
pub trait ArmSelector {
    fn select(&mut self, view: &SelectionView<'_>, rng: &mut dyn RngCore) -> usize;
}

/// Uniform draw over the surviving set; the inspectors' own rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSelector;

impl ArmSelector for UniformSelector {
    fn select(&mut self, view: &SelectionView<'_>, rng: &mut dyn RngCore) -> usize {
        uniform_pick(view.active, rng)
    }
}

pub(crate) fn uniform_pick(active: &[usize], rng: &mut dyn RngCore) -> usize {
    if active.len() == 1 {
        active[0]
    } else {
        active[rng.gen_range(0..active.len())]
    }
}

/// Highest empirical mean of ones among surviving arms; untried arms first,
/// ties to the lowest index.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyMean;

impl ArmSelector for GreedyMean {
    fn select(&mut self, view: &SelectionView<'_>, _rng: &mut dyn RngCore) -> usize {
        let score = |arm: usize| {
            let s = &view.arms[arm];
            if s.pulls() == 0 {
                f64::INFINITY
            } else {
                s.ones() as f64 / s.pulls() as f64
            }
        };
        let mut best = view.active[0];
        let mut best_score = score(best);
        for &arm in &view.active[1..] {
            let sc = score(arm);
            if sc > best_score {
                best = arm;
                best_score = sc;
            }
        }
        best
    }
}

/// Always names the same arm. Mostly useful for exercising policy violations.
#[derive(Debug, Clone, Copy)]
pub struct FixedArm(pub usize);

impl ArmSelector for FixedArm {
    fn select(&mut self, _view: &SelectionView<'_>, _rng: &mut dyn RngCore) -> usize {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_prefers_untried_then_best_mean() {
        let mut arms = [ArmState::new(); 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let active = [0, 1, 2];
        arms[0].record(true).unwrap();
        arms[1].record(true).unwrap();
        let view = SelectionView {
            active: &active,
            arms: &arms,
            t: 2,
        };
        assert_eq!(GreedyMean.select(&view, &mut rng), 2);

        arms[2].record(false).unwrap();
        arms[0].record(false).unwrap();
        let view = SelectionView {
            active: &active,
            arms: &arms,
            t: 4,
        };
        assert_eq!(GreedyMean.select(&view, &mut rng), 1);
    }

    #[test]
    fn uniform_stays_in_active_set() {
        let arms = [ArmState::new(); 6];
        let active = [1, 3, 4];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let view = SelectionView {
            active: &active,
            arms: &arms,
            t: 0,
        };
        let picks: Vec<usize> = (0..300)
            .map(|_| UniformSelector.select(&view, &mut rng))
            .collect();
        assert!(picks.iter().all(|p| active.contains(p)));
        for a in active {
            assert!(picks.contains(&a));
        }
    }
}
