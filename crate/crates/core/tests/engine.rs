use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safety_inspector_core::metrics::{handicap, testing_time_at};
use safety_inspector_core::seed::derive_seed;
use safety_inspector_core::sprt::log_lik_from_counts;
use safety_inspector_core::{
    check_discard_count, run, Algorithm, ArmClass, ArmState, BanditEnv, GreedyMean, Recording,
    SafetyConfig, UniformSelector, Verdict,
};

fn random_setup(seed: u64) -> (Vec<f64>, SafetyConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..12);
    let means = (0..n).map(|_| rng.gen_range(0.7..1.0)).collect();
    let mu = rng.gen_range(0.8..0.92);
    let eps = rng.gen_range(0.01..0.06);
    let alpha = rng.gen_range(0.01..0.5);
    (means, SafetyConfig::new(mu, eps, alpha).unwrap())
}

#[test]
fn surviving_set_only_shrinks() {
    for seed in 0..30 {
        let (means, c) = random_setup(seed);
        let mut env = BanditEnv::new(means, seed).unwrap();
        let trace = run(&mut env, Algorithm::Relaxed(c), 4000, Recording::Full).unwrap();
        assert!(trace.steps.windows(2).all(|w| w[1].active <= w[0].active));

        let mut env = BanditEnv::new(vec![0.9, 0.99, 1.0, 0.5], seed).unwrap();
        let trace = run(&mut env, Algorithm::Flawless, 400, Recording::Full).unwrap();
        assert!(trace.steps.windows(2).all(|w| w[1].active <= w[0].active));
        assert!(!trace.arms[2].verdict.is_discarded());
    }
}

#[test]
fn handicap_is_sum_of_unsafe_testing_times() {
    for seed in 0..40 {
        let (means, c) = random_setup(1000 + seed);
        let mut env = BanditEnv::new(means, seed).unwrap();
        let trace = run(&mut env, Algorithm::Relaxed(c), 2000, Recording::Full).unwrap();
        let unsafe_arms: Vec<usize> = (0..trace.num_arms())
            .filter(|&a| trace.arms[a].class == ArmClass::Unsafe)
            .collect();
        for t in (0..=trace.len).step_by(97) {
            let sum: u64 = unsafe_arms
                .iter()
                .map(|&a| testing_time_at(&trace, a, t).unwrap())
                .sum();
            assert_eq!(handicap(&trace, t).unwrap(), sum);
        }
    }
}

/// The gate of each arm only sees that arm's own returns: replaying an arm's
/// outcome subsequence through a standalone SPRT gives the same verdict.
#[test]
fn discard_depends_only_on_own_outcomes() {
    for seed in 0..30 {
        let (means, c) = random_setup(2000 + seed);
        let mut env = BanditEnv::new(means.clone(), seed).unwrap();
        let trace = run(&mut env, Algorithm::Relaxed(c), 3000, Recording::Full).unwrap();
        for arm in 0..means.len() {
            let mut solo = ArmState::new();
            for s in trace.steps.iter().filter(|s| s.arm == arm) {
                solo.update_log_lik(&c, s.outcome).unwrap();
                if solo.check_discard_count(&c).is_discarded() {
                    solo.discard();
                }
            }
            assert_eq!(solo.verdict(), trace.arms[arm].verdict);
            assert_eq!(solo.pulls(), trace.arms[arm].pulls);

            // And the subsequence is the arm's own stream, regardless of order.
            let mut fresh = BanditEnv::new(means.clone(), seed).unwrap();
            for s in trace.steps.iter().filter(|s| s.arm == arm) {
                assert_eq!(fresh.pull(arm).unwrap(), s.outcome);
            }
        }
    }
}

#[test]
fn same_seed_same_trace() {
    let (means, c) = random_setup(9);
    let a = run(
        &mut BanditEnv::new(means.clone(), 5).unwrap(),
        Algorithm::Relaxed(c),
        5000,
        Recording::Full,
    )
    .unwrap();
    let b = run(
        &mut BanditEnv::new(means.clone(), 5).unwrap(),
        Algorithm::Relaxed(c),
        5000,
        Recording::Full,
    )
    .unwrap();
    assert_eq!(a, b);
    let d = run(
        &mut BanditEnv::new(means, 6).unwrap(),
        Algorithm::Relaxed(c),
        5000,
        Recording::Full,
    )
    .unwrap();
    assert_ne!(a.steps, d.steps);
}

#[test]
fn running_loglik_agrees_with_counts_in_runs() {
    let (means, c) = random_setup(4);
    let trace = run(
        &mut BanditEnv::new(means, 4).unwrap(),
        Algorithm::Relaxed(c),
        3000,
        Recording::Final,
    )
    .unwrap();
    for a in &trace.arms {
        let exact = log_lik_from_counts(a.pulls, a.zeros, &c);
        let scale = a.zeros as f64 * c.lambda0() + (a.pulls - a.zeros) as f64 * c.lambda1();
        assert!((a.log_lik - exact).abs() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn flawless_mean_testing_time_is_geometric() {
    let runs = 10_000;
    let mut total = 0u64;
    for r in 0..runs {
        let mut env = BanditEnv::new(vec![0.8], derive_seed(3, &[r])).unwrap();
        let trace = run(&mut env, Algorithm::Flawless, 10_000, Recording::Final).unwrap();
        assert!(trace.exhausted);
        total += trace.arms[0].pulls;
    }
    let mean = total as f64 / runs as f64;
    // Geometric: mean 1/(1-p) = 5, variance p/(1-p)^2 = 20.
    let sigma = (20.0f64 / runs as f64).sqrt();
    assert!((mean - 5.0).abs() <= 3.0 * sigma, "mean {mean}");
    assert!(mean <= 25.0);
}

/// Exact law of the discard time by enumerating every outcome path of length
/// `horizon` and evaluating the likelihood ratio from the Bernoulli masses.
fn enumerate_discard_cdf(mean: f64, mu: f64, eps: f64, alpha: f64, horizon: usize) -> Vec<f64> {
    let log_a = (1.0 / alpha).ln();
    let mut cdf = vec![0.0; horizon + 1];
    for bits in 0u32..(1 << horizon) {
        let ones: Vec<bool> = (0..horizon).map(|i| bits >> i & 1 == 1).collect();
        let prob: f64 = ones
            .iter()
            .map(|&o| if o { mean } else { 1.0 - mean })
            .product();
        let mut ratio = 1.0f64;
        for (i, &one) in ones.iter().enumerate() {
            ratio *= if one {
                mu / (mu + eps)
            } else {
                (1.0 - mu) / (1.0 - mu - eps)
            };
            // Ties count as crossings.
            if ratio.ln() >= log_a - 1e-12 {
                for slot in cdf.iter_mut().skip(i + 1) {
                    *slot += prob;
                }
                break;
            }
        }
    }
    cdf
}

#[test]
fn half_alpha_discard_law_matches_enumeration() {
    let horizon = 5;
    let exact = enumerate_discard_cdf(0.8, 0.9, 0.05, 0.5, horizon);
    assert!((exact[1] - 0.2).abs() < 1e-12);
    // A zero after a one does not discard: the law is not 1 - 0.8^t.
    assert!((exact[2] - 0.2).abs() < 1e-12);

    let c = SafetyConfig::new(0.9, 0.05, 0.5).unwrap();
    let runs = 100_000u64;
    let mut hits = vec![0u64; horizon + 1];
    for r in 0..runs {
        let mut env = BanditEnv::new(vec![0.8], derive_seed(17, &[r])).unwrap();
        let trace = run(
            &mut env,
            Algorithm::Relaxed(c),
            horizon as u64,
            Recording::Final,
        )
        .unwrap();
        if let Verdict::Discarded { at_pull } = trace.arms[0].verdict {
            for h in hits.iter_mut().skip(at_pull as usize) {
                *h += 1;
            }
        }
    }
    for t in 1..=horizon {
        let p = exact[t];
        let freq = hits[t] as f64 / runs as f64;
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "t={t} freq={freq} exact={p}"
        );
    }
}

#[test]
fn count_rule_matches_first_crossing_of_enumeration() {
    // Cross-check the count form against the direct ratio product on every
    // prefix of length <= 12.
    let c = SafetyConfig::new(0.9, 0.05, 0.1).unwrap();
    for bits in 0u32..(1 << 12) {
        let mut ratio = 1.0f64;
        let mut zeros = 0;
        for t in 1..=12u64 {
            let one = bits >> (t - 1) & 1 == 1;
            ratio *= if one { 0.9 / 0.95 } else { 0.1 / 0.05 };
            zeros += u64::from(!one);
            let direct = ratio.ln() >= (1.0f64 / 0.1).ln();
            assert_eq!(check_discard_count(t, zeros, &c).is_discarded(), direct);
        }
    }
}

#[test]
fn uniform_filter_discards_like_relaxed() {
    let c = SafetyConfig::new(0.9, 0.05, 0.1).unwrap();
    let means = vec![0.85, 0.9, 0.95, 0.97];
    let runs = 10_000u64;
    let horizon = 600;
    let (mut plain, mut filtered) = (0u64, 0u64);
    for r in 0..runs {
        let mut env = BanditEnv::new(means.clone(), derive_seed(21, &[r])).unwrap();
        let t = run(&mut env, Algorithm::Relaxed(c), horizon, Recording::Final).unwrap();
        plain += t.arms.iter().filter(|a| a.verdict.is_discarded()).count() as u64;
        let mut env = BanditEnv::new(means.clone(), derive_seed(22, &[r])).unwrap();
        let mut policy = UniformSelector;
        let t = run(
            &mut env,
            Algorithm::Filtered(c, &mut policy),
            horizon,
            Recording::Final,
        )
        .unwrap();
        filtered += t.arms.iter().filter(|a| a.verdict.is_discarded()).count() as u64;
    }
    let (a, b) = (plain as f64 / runs as f64, filtered as f64 / runs as f64);
    // Discard count per run lies in [0, 4]; its variance is at most 4.
    let sigma = (2.0 * 4.0 / runs as f64).sqrt();
    assert!((a - b).abs() <= 3.0 * sigma, "relaxed {a} vs filtered {b}");
}

#[test]
fn greedy_filter_still_discards_every_unsafe_arm() {
    let c = SafetyConfig::new(0.9, 0.05, 0.1).unwrap();
    let means = vec![0.99, 0.97, 0.85, 0.8, 0.9, 0.96];
    for seed in 0..200 {
        let mut env = BanditEnv::new(means.clone(), seed).unwrap();
        let mut greedy = GreedyMean;
        let trace = run(
            &mut env,
            Algorithm::Filtered(c, &mut greedy),
            100_000,
            Recording::Final,
        )
        .unwrap();
        assert_eq!(trace.unsafe_remaining(), 0, "seed {seed}");
    }
}

#[test]
fn unsafe_arms_detected_well_before_ten_bounds() {
    let c = SafetyConfig::new(0.9, 0.05, 0.1).unwrap();
    let means = vec![0.8, 0.85, 0.88];
    let horizon =
        (10.0 * safety_inspector_core::detection_time_bound(&c) * means.len() as f64) as u64;
    let runs = 10_000u64;
    let survivors = (0..runs)
        .filter(|&r| {
            let mut env = BanditEnv::new(means.clone(), derive_seed(31, &[r])).unwrap();
            let trace = run(&mut env, Algorithm::Relaxed(c), horizon, Recording::Final).unwrap();
            trace.unsafe_remaining() > 0
        })
        .count();
    assert!(
        survivors as f64 / runs as f64 <= 0.001,
        "{survivors} runs kept an unsafe arm"
    );
}
