//! Sampling and enumeration oracles checked against the analytic machinery.

use misspec::mdp::{policy_return, random_mdp, random_policy, random_reward, RewardFunction, TabularMdp};
use misspec::oracle::{horizon_for_bias, monte_carlo_return, regret_witness_search, same_order_oracle, DEFAULT_POLICY_CAP};
use misspec::starc::StarcMetric;
use misspec::transforms::{apply_potential_shaping, random_potential_function};

#[test]
fn monte_carlo_agrees_with_policy_evaluation() {
    let mdp = random_mdp(21, 5, 3, 1.0).unwrap();
    let r = random_reward(22, 5, 3, 1.0);
    let pi = random_policy(23, 5, 3);
    let horizon = horizon_for_bias(mdp.discount(), r.max_abs(), 1e-6);
    let (mean, se) = monte_carlo_return(&mdp, &r, &pi, horizon, 100_000, 24).unwrap();
    let exact = policy_return(&mdp, &r, &pi).unwrap();
    assert!((mean - exact).abs() < 3.0 * se, "mean {mean} exact {exact} se {se}");
}

#[test]
fn monte_carlo_trivial_cases() {
    let one = TabularMdp::new(1, 1, vec![1.0], vec![1.0], 0.5).unwrap();
    let ones = RewardFunction::new(1, 1, vec![1.0]).unwrap();
    let pi = random_policy(1, 1, 1);
    let (mean, se) = monte_carlo_return(&one, &ones, &pi, 60, 10, 1).unwrap();
    assert!((mean - 2.0).abs() < 1e-9 && se == 0.0);
    let mdp = random_mdp(2, 3, 2, 1.0).unwrap();
    let zero = RewardFunction::zeros(3, 2);
    assert_eq!(monte_carlo_return(&mdp, &zero, &random_policy(3, 3, 2), 50, 100, 4).unwrap(), (0.0, 0.0));
}

#[test]
fn ordering_oracle_matches_zero_distance() {
    let mut equal = 0;
    for seed in 0..60u64 {
        let n = 2 + (seed % 3) as usize;
        let mdp = random_mdp(seed, n, 2, 0.7).unwrap();
        let metric = StarcMetric::new(&mdp);
        let r1 = random_reward(seed + 500, n, 2, 1.0);
        let r2 = match seed % 3 {
            0 => &apply_potential_shaping(&r1, &random_potential_function(seed, n, 1.0), mdp.discount()).unwrap() * 2.5,
            1 => -&r1,
            _ => random_reward(seed + 900, n, 2, 1.0),
        };
        let close = metric.distance(&r1, &r2).unwrap().distance < 1e-8;
        equal += close as usize;
        assert_eq!(close, same_order_oracle(&mdp, &r1, &r2).unwrap(), "seed {seed}");
    }
    assert_eq!(equal, 20);
}

// Regret along R -> -R never decreases and ends at 1.
#[test]
fn regret_grows_along_negation_path() {
    for seed in 0..10u64 {
        let mdp = random_mdp(seed, 3, 2, 0.7).unwrap();
        let metric = StarcMetric::new(&mdp);
        let r1 = random_reward(seed + 40, 3, 2, 1.0);
        let mut last = (-1.0, -1.0);
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let r2 = &r1 * (1.0 - 2.0 * t);
            let d = metric.distance(&r1, &r2).unwrap().distance;
            let w = regret_witness_search(&mdp, &r1, &r2, DEFAULT_POLICY_CAP).unwrap();
            assert!(d >= last.0 - 1e-12 && w.normalized_regret >= last.1 - 1e-12, "seed {seed} t {t}");
            last = (d, w.normalized_regret);
        }
        assert!((last.1 - 1.0).abs() < 1e-8);
    }
}
