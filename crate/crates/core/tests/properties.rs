//! Randomized properties of the STARC distance and the transformations that
//! preserve it.

use misspec::mdp::{random_mdp, random_reward, TabularMdp};
use misspec::starc::StarcMetric;
use misspec::transforms::{apply_potential_shaping, apply_redistribution_noise, random_potential_function};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (TabularMdp, u64)> {
    (any::<u64>(), 2usize..=6, 1usize..=3, prop_oneof![Just(0.3), Just(1.0), Just(5.0)])
        .prop_map(|(seed, n, na, conc)| (random_mdp(seed, n, na, conc).unwrap(), seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms((mdp, seed) in instance()) {
        let (n, na) = (mdp.n_states(), mdp.n_actions());
        let metric = StarcMetric::new(&mdp);
        let a = random_reward(seed ^ 1, n, na, 1.0);
        let b = random_reward(seed ^ 2, n, na, 1.0);
        let c = random_reward(seed ^ 3, n, na, 1.0);
        let dab = metric.distance(&a, &b).unwrap().distance;
        let dba = metric.distance(&b, &a).unwrap().distance;
        let dbc = metric.distance(&b, &c).unwrap().distance;
        let dac = metric.distance(&a, &c).unwrap().distance;
        prop_assert_eq!(dab, dba);
        prop_assert!(metric.distance(&a, &a).unwrap().distance < 1e-12);
        prop_assert!(dac <= dab + dbc + 1e-9);
        prop_assert!((0.0..=1.0).contains(&dab));
    }

    #[test]
    fn invariant_to_shaping_redistribution_and_scale(
        (mdp, seed) in instance(),
        scale in 0.01f64..100.0,
    ) {
        let (n, na) = (mdp.n_states(), mdp.n_actions());
        let metric = StarcMetric::new(&mdp);
        let r = random_reward(seed, n, na, 1.0);
        let shaped = apply_potential_shaping(&r, &random_potential_function(seed ^ 7, n, 2.0), mdp.discount()).unwrap();
        let moved = apply_redistribution_noise(&shaped, &mdp, seed ^ 9, 2.0).unwrap();
        let scaled = &moved * scale;
        prop_assert!(metric.distance(&r, &scaled).unwrap().distance < 1e-8);
    }

    #[test]
    fn negation_is_maximal((mdp, seed) in instance()) {
        let (n, na) = (mdp.n_states(), mdp.n_actions());
        let metric = StarcMetric::new(&mdp);
        let r = random_reward(seed, n, na, 1.0);
        prop_assume!(!metric.is_trivial(&r).unwrap());
        prop_assert!((metric.distance(&r, &-&r).unwrap().distance - 1.0).abs() < 1e-8);
    }
}
