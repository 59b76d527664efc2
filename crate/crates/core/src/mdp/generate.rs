use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{Policy, RewardFunction, TabularMdp};
use crate::error::{Error, Result};

/// Discount given to generated instances.
pub const DEFAULT_DISCOUNT: f64 = 0.9;

const MAX_RESAMPLES: usize = 100;

fn simplex(rng: &mut impl Rng, gamma: &Gamma<f64>, n: usize) -> Option<Vec<f64>> {
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    Some(draws.into_iter().map(|x| x / total).collect())
}

/// Random MDP with symmetric-Dirichlet transition rows and initial
/// distribution. Small concentrations give near-deterministic rows, large ones
/// near-uniform rows. Draws that leave a state unreachable are rejected.
pub fn random_mdp(seed: u64, n_states: usize, n_actions: usize, concentration: f64) -> Result<TabularMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidArgument("sizes must be positive".into()));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_err = None;

    'attempt: for _ in 0..MAX_RESAMPLES {
        let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            match simplex(&mut rng, &gamma, n_states) {
                Some(row) => transition.extend(row),
                None => continue 'attempt,
            }
        }
        let Some(mu0) = simplex(&mut rng, &gamma, n_states) else {
            continue;
        };
        match TabularMdp::new(n_states, n_actions, transition, mu0, DEFAULT_DISCOUNT) {
            Ok(mdp) => return Ok(mdp),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::InvalidArgument(format!(
        "no valid MDP after {MAX_RESAMPLES} draws at concentration {concentration}: {}",
        last_err.map_or_else(|| "simplex draws underflowed".to_string(), |e| e.to_string())
    )))
}

/// Reward with i.i.d. `N(0, scale²)` entries.
pub fn random_reward(seed: u64, n_states: usize, n_actions: usize, scale: f64) -> RewardFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RewardFunction::from_fn(n_states, n_actions, |_, _, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * scale
    })
}

/// Stochastic policy with rows drawn uniformly from the simplex.
pub fn random_policy(seed: u64, n_states: usize, n_actions: usize) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(1.0, 1.0).expect("unit gamma");
    let mut probs = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states {
        let row = loop {
            if let Some(row) = simplex(&mut rng, &gamma, n_actions) {
                break row;
            }
        };
        probs.extend(row);
    }
    Policy::from_raw(n_states, n_actions, probs)
}

/// Vector of i.i.d. `N(0, scale²)` entries, used as a potential.
pub fn random_potential(seed: u64, n_states: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_states)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let a = random_mdp(42, 5, 3, 0.3).unwrap();
        let b = random_mdp(42, 5, 3, 0.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(random_reward(7, 5, 3, 1.0), random_reward(7, 5, 3, 1.0));
        assert_ne!(random_mdp(43, 5, 3, 0.3).unwrap(), a);
    }

    #[test]
    fn generated_instances_are_valid() {
        for seed in 0..50 {
            let mdp = random_mdp(seed, 1 + seed as usize % 7, 1 + seed as usize % 4, 0.1).unwrap();
            let again = TabularMdp::new(
                mdp.n_states(),
                mdp.n_actions(),
                mdp.transition().to_vec(),
                mdp.mu0().to_vec(),
                mdp.discount(),
            );
            assert!(again.is_ok());
        }
    }

    #[test]
    fn large_concentration_is_near_uniform() {
        for seed in 0..100 {
            let mdp = random_mdp(seed, 10, 2, 1e4).unwrap();
            let max = mdp.transition().iter().copied().fold(0.0, f64::max);
            assert!(max < 2.0 / 10.0, "seed {seed}: max entry {max}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(random_mdp(0, 0, 2, 1.0).is_err());
        assert!(random_mdp(0, 2, 0, 1.0).is_err());
        assert!(random_mdp(0, 2, 2, 0.0).is_err());
        assert!(random_mdp(0, 2, 2, f64::NAN).is_err());
    }

    #[test]
    fn reward_scale_applies() {
        let r = random_reward(3, 4, 2, 0.0);
        assert!(r.as_slice().iter().all(|&v| v == 0.0));
        let r = random_reward(3, 20, 3, 1.0);
        let mean_sq = r.as_slice().iter().map(|v| v * v).sum::<f64>() / r.as_slice().len() as f64;
        assert!((mean_sq - 1.0).abs() < 0.1, "{mean_sq}");
    }
}
