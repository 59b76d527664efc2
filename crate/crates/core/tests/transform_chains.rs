//! Decomposition round trips, nudge bounds, and the checker applied to
//! models composed with bounded transformations.

use misspec::mdp::{random_mdp, random_reward, TabularMdp};
use misspec::models::{materialize_with, BehavioralModel, Boltzmann, MaxCausalEntropy};
use misspec::robustness::{
    check_epsilon_robust, decompose_transformation, g_collisions_beyond, min_robust_epsilon, two_epsilon_lemma_check,
    verify_transformation_bound, HypothesisSet, DEFAULT_ETA,
};
use misspec::starc::StarcMetric;
use misspec::transforms::{apply_potential_shaping, apply_redistribution_noise, random_potential_function, TransformStep};

fn dressed(mdp: &TabularMdp, r: &misspec::mdp::RewardFunction, seed: u64, scale: f64) -> misspec::mdp::RewardFunction {
    let shaped = apply_potential_shaping(r, &random_potential_function(seed, mdp.n_states(), 1.0), mdp.discount()).unwrap();
    &apply_redistribution_noise(&shaped, mdp, seed ^ 0xff, 1.0).unwrap() * scale
}

// The single nudge of the decomposition has norm ‖c(R)‖·sin θ where θ is the
// angle between the standardized rewards, and θ = 2·arcsin(d).
#[test]
fn decomposition_meets_angle_bound() {
    for seed in 0..100u64 {
        let mdp = random_mdp(seed, 3 + (seed % 3) as usize, 2, 0.8).unwrap();
        let metric = StarcMetric::new(&mdp);
        let d = 0.05 + 0.6 * (seed as f64 / 100.0);
        let (u1, u2) = metric.pair_at_distance(seed + 7, d).unwrap();
        let r = dressed(&mdp, &u1, seed, 2.0);
        let target = dressed(&mdp, &u2, seed + 1000, 0.5);
        let measured = metric.distance(&r, &target).unwrap().distance;
        assert!((measured - d).abs() < 1e-9);

        let chain = decompose_transformation(&mdp, &r, &target).unwrap();
        assert_eq!(chain.nudge_count(), 1);
        let out = chain.apply(&mdp, &r).unwrap();
        assert!(out.max_abs_diff(&target) < 1e-8, "seed {seed}: {:e}", out.max_abs_diff(&target));

        let trace = chain.apply_traced(&mdp, &r).unwrap();
        let k = chain.steps.iter().position(TransformStep::is_nudge).unwrap();
        let ratio = (&trace[k + 1] - &trace[k]).norm() / metric.canonicalize(&trace[k]).unwrap().norm;
        let theta = 2.0 * measured.asin();
        assert!((ratio - theta.sin()).abs() < 1e-9, "seed {seed}: ratio {ratio} sin {}", theta.sin());

        // in terms of the bound's own parameterization, ε must be twice the distance
        let report = verify_transformation_bound(&mdp, &chain, std::slice::from_ref(&r), 2.0 * measured + 1e-9).unwrap();
        assert!(report.holds, "seed {seed}: {report:?}");
    }
}

fn forward_direction(model: &dyn BehavioralModel, seed: u64) {
    let mdp = random_mdp(seed, 4, 2, 0.6).unwrap();
    let metric = StarcMetric::new(&mdp);
    let (u1, u2) = metric.pair_at_distance(seed, 0.2).unwrap();
    let (v1, v2) = metric.pair_at_distance(seed + 50, 0.1).unwrap();
    let rewards = vec![
        dressed(&mdp, &u1, seed + 1, 1.0),
        dressed(&mdp, &u2, seed + 2, 3.0),
        dressed(&mdp, &v1, seed + 3, 0.7),
        dressed(&mdp, &v2, seed + 4, 1.5),
    ];
    let set = HypothesisSet::from_rewards(rewards.clone()).unwrap();
    let f = materialize_with(model, &mdp, &set).unwrap();
    // t swaps each reward with its partner; every swap moves a reward by at most 0.2
    let swapped = HypothesisSet::from_rewards([1, 0, 3, 2].iter().map(|&k| rewards[k].clone()).collect()).unwrap();
    let g = materialize_with(model, &mdp, &swapped).unwrap();

    let verdict = check_epsilon_robust(&f, &g, &set, &metric, 0.2, DEFAULT_ETA).unwrap();
    assert!(verdict.robust, "{:?}", verdict.violations);
    let eps = min_robust_epsilon(&f, &g, &set, &metric, DEFAULT_ETA).unwrap();
    assert!(eps <= 0.2 + 1e-8, "{eps}");
    assert!(two_epsilon_lemma_check(&f, &g, &set, &metric, eps, DEFAULT_ETA).unwrap());
    assert!(g_collisions_beyond(&g, &set, &metric, 2.0 * eps + 1e-8, DEFAULT_ETA).unwrap().is_empty());

    let too_tight = check_epsilon_robust(&f, &g, &set, &metric, 0.15, DEFAULT_ETA).unwrap();
    assert_eq!(too_tight.conditions(), vec![1, 1]);
}

#[test]
fn bounded_relabelling_is_robust_boltzmann() {
    for seed in 0..5 {
        forward_direction(&Boltzmann::new(2.0).unwrap(), seed);
    }
}

#[test]
fn bounded_relabelling_is_robust_mce() {
    for seed in 0..5 {
        forward_direction(&MaxCausalEntropy::new(0.5).unwrap(), seed);
    }
}

#[test]
fn unrelated_rewards_collide_nowhere() {
    let mdp = random_mdp(3, 3, 3, 1.0).unwrap();
    let set = HypothesisSet::from_rewards((0..6).map(|k| random_reward(k, 3, 3, 1.0)).collect()).unwrap();
    let model = Boltzmann::new(1.0).unwrap();
    let f = materialize_with(&model, &mdp, &set).unwrap();
    let g = materialize_with(&Boltzmann::new(3.0).unwrap(), &mdp, &set).unwrap();
    let verdict = check_epsilon_robust(&f, &g, &set, &StarcMetric::new(&mdp), 0.0, DEFAULT_ETA).unwrap();
    // g's sharper policies match nothing that f produces
    assert!(!verdict.robust);
    assert!(verdict.violations.iter().all(|v| v.condition == 3));
    assert_eq!(verdict.violations.len(), 6);
}
