//! Brute-force and sampling oracles. They share nothing with the projection
//! code in [`crate::starc`], so agreement between the two is meaningful.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{expected_reward, policy_return, random_policy, Policy, RewardFunction, TabularMdp};

/// Default limit on `|A|^|S|` for exhaustive enumeration.
pub const DEFAULT_POLICY_CAP: usize = 4096;

/// Sign band for treating a return difference as a tie.
pub const SIGN_BAND: f64 = 1e-10;

/// Number of random stochastic policy pairs checked by the ordering oracle.
pub const STOCHASTIC_PAIRS: usize = 200;

/// Deterministic policy encoded as base-`|A|` digits, state 0 least significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeterministicPolicyIndex(pub u64);

impl DeterministicPolicyIndex {
    pub fn actions(self, n_states: usize, n_actions: usize) -> Vec<usize> {
        let mut rest = self.0;
        (0..n_states)
            .map(|_| {
                let a = (rest % n_actions as u64) as usize;
                rest /= n_actions as u64;
                a
            })
            .collect()
    }

    pub fn from_actions(actions: &[usize], n_actions: usize) -> Self {
        DeterministicPolicyIndex(actions.iter().rev().fold(0u64, |acc, &a| acc * n_actions as u64 + a as u64))
    }

    pub fn to_policy(self, n_states: usize, n_actions: usize) -> Policy {
        Policy::deterministic(n_actions, &self.actions(n_states, n_actions)).expect("digits are in range")
    }
}

/// `|A|^|S|`, saturating.
pub fn deterministic_policy_count(mdp: &TabularMdp) -> u128 {
    let mut count: u128 = 1;
    for _ in 0..mdp.n_states() {
        count = count.saturating_mul(mdp.n_actions() as u128);
    }
    count
}

fn checked_count(mdp: &TabularMdp, cap: usize) -> Result<u64> {
    let count = deterministic_policy_count(mdp);
    if count > cap as u128 {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok(count as u64)
}

pub fn enumerate_deterministic_policies(mdp: &TabularMdp, cap: usize) -> Result<Vec<Policy>> {
    let count = checked_count(mdp, cap)?;
    Ok((0..count)
        .map(|i| DeterministicPolicyIndex(i).to_policy(mdp.n_states(), mdp.n_actions()))
        .collect())
}

/// Discounted state visitation of every deterministic policy, in index order.
/// Returns can then be read off as `Σ_s d(s) r(s, π(s))` for any reward.
struct Enumeration {
    actions: Vec<Vec<usize>>,
    visits: Vec<Vec<f64>>,
}

impl Enumeration {
    fn new(mdp: &TabularMdp, cap: usize) -> Result<Self> {
        let count = checked_count(mdp, cap)?;
        let (n, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());
        let rhs = DVector::from_column_slice(mdp.mu0());
        let mut actions = Vec::with_capacity(count as usize);
        let mut visits = Vec::with_capacity(count as usize);
        for i in 0..count {
            let acts = DeterministicPolicyIndex(i).actions(n, na);
            let mut system = DMatrix::<f64>::identity(n, n);
            for (s, &a) in acts.iter().enumerate() {
                for (next, &p) in mdp.row(s, a).iter().enumerate() {
                    system[(next, s)] -= gamma * p;
                }
            }
            let d = system
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numerical("visitation system is singular".into()))?;
            actions.push(acts);
            visits.push(d.as_slice().to_vec());
        }
        Ok(Enumeration { actions, visits })
    }

    fn returns(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<Vec<f64>> {
        let r_sa = expected_reward(mdp, reward)?;
        let na = mdp.n_actions();
        Ok(self
            .actions
            .iter()
            .zip(&self.visits)
            .map(|(acts, d)| acts.iter().enumerate().map(|(s, &a)| d[s] * r_sa[s * na + a]).sum())
            .collect())
    }
}

/// Returns of every deterministic policy, in index order.
pub fn deterministic_returns(mdp: &TabularMdp, reward: &RewardFunction, cap: usize) -> Result<Vec<f64>> {
    Enumeration::new(mdp, cap)?.returns(mdp, reward)
}

fn banded_sign(x: f64, band: f64) -> i8 {
    if x > band {
        1
    } else if x < -band {
        -1
    } else {
        0
    }
}

/// A pair of policies ordered differently by the two rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDisagreement {
    pub policy_a: Policy,
    pub policy_b: Policy,
    pub return_gap_1: f64,
    pub return_gap_2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SameOrderReport {
    pub same_order: bool,
    pub deterministic_pairs: u64,
    pub stochastic_pairs: usize,
    pub deterministic_disagreements: u64,
    pub stochastic_disagreements: usize,
    pub first_disagreement: Option<OrderDisagreement>,
}

/// Compares the policy orderings induced by two rewards: exhaustively over
/// deterministic policies, then over seeded random stochastic pairs. The tie
/// band is [`SIGN_BAND`] relative to the largest return magnitude of each reward.
pub fn same_order_report(mdp: &TabularMdp, r1: &RewardFunction, r2: &RewardFunction, cap: usize, seed: u64) -> Result<SameOrderReport> {
    mdp.check_reward(r1)?;
    mdp.check_reward(r2)?;
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let enumeration = Enumeration::new(mdp, cap)?;
    let j1 = enumeration.returns(mdp, r1)?;
    let j2 = enumeration.returns(mdp, r2)?;
    let band = |j: &[f64]| SIGN_BAND * j.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let (band1, band2) = (band(&j1), band(&j2));

    let mut first = None;
    let mut det_pairs = 0u64;
    let mut det_bad = 0u64;
    for a in 0..j1.len() {
        for b in (a + 1)..j1.len() {
            det_pairs += 1;
            let (g1, g2) = (j1[a] - j1[b], j2[a] - j2[b]);
            if banded_sign(g1, band1) != banded_sign(g2, band2) {
                det_bad += 1;
                if first.is_none() {
                    first = Some(OrderDisagreement {
                        policy_a: DeterministicPolicyIndex(a as u64).to_policy(n, na),
                        policy_b: DeterministicPolicyIndex(b as u64).to_policy(n, na),
                        return_gap_1: g1,
                        return_gap_2: g2,
                    });
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sto_bad = 0usize;
    for _ in 0..STOCHASTIC_PAIRS {
        let pa = random_policy(rng.random(), n, na);
        let pb = random_policy(rng.random(), n, na);
        let g1 = policy_return(mdp, r1, &pa)? - policy_return(mdp, r1, &pb)?;
        let g2 = policy_return(mdp, r2, &pa)? - policy_return(mdp, r2, &pb)?;
        if banded_sign(g1, band1) != banded_sign(g2, band2) {
            sto_bad += 1;
            if first.is_none() {
                first = Some(OrderDisagreement {
                    policy_a: pa,
                    policy_b: pb,
                    return_gap_1: g1,
                    return_gap_2: g2,
                });
            }
        }
    }

    Ok(SameOrderReport {
        same_order: det_bad == 0 && sto_bad == 0,
        deterministic_pairs: det_pairs,
        stochastic_pairs: STOCHASTIC_PAIRS,
        deterministic_disagreements: det_bad,
        stochastic_disagreements: sto_bad,
        first_disagreement: first,
    })
}

/// Seed used by [`same_order_oracle`] for its stochastic pairs.
pub const SAME_ORDER_SEED: u64 = 0x0bde_7a11;

pub fn same_order_oracle(mdp: &TabularMdp, r1: &RewardFunction, r2: &RewardFunction) -> Result<bool> {
    Ok(same_order_report(mdp, r1, r2, DEFAULT_POLICY_CAP, SAME_ORDER_SEED)?.same_order)
}

/// Truncated discounted return averaged over sampled trajectories, with its
/// standard error.
pub fn monte_carlo_return(
    mdp: &TabularMdp,
    reward: &RewardFunction,
    policy: &Policy,
    horizon: usize,
    n_rollouts: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    mdp.check_reward(reward)?;
    mdp.check_policy(policy)?;
    if n_rollouts == 0 {
        return Err(Error::InvalidArgument("need at least one rollout".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = mdp.discount();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_rollouts {
        let mut s = sample(&mut rng, mdp.mu0());
        let (mut g, mut discount) = (0.0, 1.0);
        for _ in 0..horizon {
            let a = sample(&mut rng, policy.row(s));
            let next = sample(&mut rng, mdp.row(s, a));
            g += discount * reward.get(s, a, next);
            discount *= gamma;
            s = next;
        }
        sum += g;
        sum_sq += g * g;
    }
    let n = n_rollouts as f64;
    let mean = sum / n;
    let se = if n_rollouts > 1 {
        ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// Smallest horizon `H` with `γ^H · max|R| / (1 − γ) < bias`.
pub fn horizon_for_bias(gamma: f64, reward_bound: f64, bias: f64) -> usize {
    if reward_bound == 0.0 {
        return 1;
    }
    let h = ((bias * (1.0 - gamma) / reward_bound).ln() / gamma.ln()).ceil();
    h.max(1.0) as usize
}

fn sample(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Result of the normalized-regret search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretWitness {
    pub normalized_regret: f64,
    /// Policy preferred by the true reward.
    pub pi1: Option<Policy>,
    /// Policy the proxy reward ranks at least as high as `pi1`.
    pub pi2: Option<Policy>,
}

/// Maximizes `(J1(π1) − J1(π2)) / (max J1 − min J1)` over deterministic pairs
/// with `J2(π2) ≥ J2(π1)`.
pub fn regret_witness_search(mdp: &TabularMdp, r1: &RewardFunction, r2: &RewardFunction, cap: usize) -> Result<RegretWitness> {
    mdp.check_reward(r1)?;
    mdp.check_reward(r2)?;
    let enumeration = Enumeration::new(mdp, cap)?;
    let j1 = enumeration.returns(mdp, r1)?;
    let j2 = enumeration.returns(mdp, r2)?;
    let hi = j1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = j1.iter().copied().fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    if range < 1e-12 {
        return Ok(RegretWitness {
            normalized_regret: 0.0,
            pi1: None,
            pi2: None,
        });
    }

    // Walk policies by decreasing J2. Every policy seen so far, including the
    // whole current tie group, is an admissible π2 for the current π1.
    let mut order: Vec<usize> = (0..j1.len()).collect();
    order.sort_by(|&a, &b| j2[b].total_cmp(&j2[a]));
    let mut best = (0.0, 0usize, 0usize);
    let mut min_j1 = (f64::INFINITY, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut end = i;
        while end < order.len() && j2[order[end]] == j2[order[i]] {
            if j1[order[end]] < min_j1.0 {
                min_j1 = (j1[order[end]], order[end]);
            }
            end += 1;
        }
        for &p in &order[i..end] {
            let regret = j1[p] - min_j1.0;
            if regret > best.0 {
                best = (regret, p, min_j1.1);
            }
        }
        i = end;
    }

    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let (regret, p1, p2) = best;
    Ok(RegretWitness {
        normalized_regret: regret / range,
        pi1: Some(DeterministicPolicyIndex(p1 as u64).to_policy(n, na)),
        pi2: Some(DeterministicPolicyIndex(p2 as u64).to_policy(n, na)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{random_mdp, random_reward};
    use crate::transforms::{apply_potential_shaping, random_potential_function};
    use approx::assert_abs_diff_eq;

    #[test]
    fn enumeration_counts() {
        let mdp = random_mdp(1, 2, 2, 1.0).unwrap();
        assert_eq!(enumerate_deterministic_policies(&mdp, DEFAULT_POLICY_CAP).unwrap().len(), 4);
        let mdp = random_mdp(1, 3, 4, 1.0).unwrap();
        let all = enumerate_deterministic_policies(&mdp, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(all.len(), 64);
        assert_eq!(all[0], Policy::deterministic(4, &[0, 0, 0]).unwrap());
        assert_eq!(all[1], Policy::deterministic(4, &[1, 0, 0]).unwrap());
        let mdp = random_mdp(1, 10, 5, 1.0).unwrap();
        let err = enumerate_deterministic_policies(&mdp, DEFAULT_POLICY_CAP).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { count: 9_765_625, cap: 4096 }), "{err}");
        assert!(err.to_string().contains("sampled search"));
    }

    #[test]
    fn index_round_trip() {
        let idx = DeterministicPolicyIndex::from_actions(&[2, 0, 1], 3);
        // base-3 digits, first state least significant
        assert_eq!(idx.0, 11);
        assert_eq!(idx.actions(3, 3), vec![2, 0, 1]);
    }

    #[test]
    fn enumerated_returns_match_evaluation() {
        let mdp = random_mdp(5, 3, 3, 0.5).unwrap();
        let r = random_reward(6, 3, 3, 1.0);
        let js = deterministic_returns(&mdp, &r, DEFAULT_POLICY_CAP).unwrap();
        for (i, policy) in enumerate_deterministic_policies(&mdp, DEFAULT_POLICY_CAP).unwrap().iter().enumerate() {
            assert_abs_diff_eq!(js[i], policy_return(&mdp, &r, policy).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn ordering_oracle_examples() {
        let mdp = random_mdp(7, 4, 2, 0.7).unwrap();
        let r = random_reward(8, 4, 2, 1.0);
        let shaped = apply_potential_shaping(&(&r * 2.0), &random_potential_function(9, 4, 1.0), mdp.discount()).unwrap();
        assert!(same_order_oracle(&mdp, &r, &shaped).unwrap());
        let report = same_order_report(&mdp, &r, &(-&r), DEFAULT_POLICY_CAP, 1).unwrap();
        assert!(!report.same_order);
        assert!(report.first_disagreement.is_some());
        assert_eq!(report.deterministic_pairs, 16 * 15 / 2);
    }

    #[test]
    fn monte_carlo_trivial_cases() {
        let mdp = TabularMdp::new(1, 1, vec![1.0], vec![1.0], 0.5).unwrap();
        let pi = Policy::uniform(1, 1);
        let zero = RewardFunction::zeros(1, 1);
        assert_eq!(monte_carlo_return(&mdp, &zero, &pi, 60, 100, 1).unwrap(), (0.0, 0.0));
        let one = RewardFunction::new(1, 1, vec![1.0]).unwrap();
        let (est, se) = monte_carlo_return(&mdp, &one, &pi, 60, 100, 1).unwrap();
        assert_abs_diff_eq!(est, 2.0, epsilon = 1e-9);
        assert!(se < 1e-9);
    }

    #[test]
    fn monte_carlo_is_deterministic_given_seed() {
        let mdp = random_mdp(3, 3, 2, 1.0).unwrap();
        let r = random_reward(4, 3, 2, 1.0);
        let pi = random_policy(5, 3, 2);
        let a = monte_carlo_return(&mdp, &r, &pi, 50, 200, 9).unwrap();
        let b = monte_carlo_return(&mdp, &r, &pi, 50, 200, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regret_examples() {
        let mdp = random_mdp(11, 3, 3, 0.5).unwrap();
        let r = random_reward(12, 3, 3, 1.0);
        assert_eq!(regret_witness_search(&mdp, &r, &r, DEFAULT_POLICY_CAP).unwrap().normalized_regret, 0.0);

        let flipped = regret_witness_search(&mdp, &r, &(-&r), DEFAULT_POLICY_CAP).unwrap();
        assert_abs_diff_eq!(flipped.normalized_regret, 1.0, epsilon = 1e-12);
        let js = deterministic_returns(&mdp, &r, DEFAULT_POLICY_CAP).unwrap();
        let j_of = |p: &Policy| policy_return(&mdp, &r, p).unwrap();
        let max = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = js.iter().copied().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(j_of(flipped.pi1.as_ref().unwrap()), max, epsilon = 1e-10);
        assert_abs_diff_eq!(j_of(flipped.pi2.as_ref().unwrap()), min, epsilon = 1e-10);

        let constant = RewardFunction::from_fn(3, 3, |_, _, _| 1.0);
        let none = regret_witness_search(&mdp, &constant, &r, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(none.normalized_regret, 0.0);
        assert!(none.pi1.is_none());
    }

    // Reference O(n²) search the sorted sweep must agree with.
    #[test]
    fn sweep_matches_quadratic_search() {
        for seed in 0..10 {
            let mdp = random_mdp(seed, 3, 3, 0.5).unwrap();
            let r1 = random_reward(seed + 100, 3, 3, 1.0);
            let r2 = random_reward(seed + 200, 3, 3, 1.0);
            let j1 = deterministic_returns(&mdp, &r1, DEFAULT_POLICY_CAP).unwrap();
            let j2 = deterministic_returns(&mdp, &r2, DEFAULT_POLICY_CAP).unwrap();
            let mut best: f64 = 0.0;
            for a in 0..j1.len() {
                for b in 0..j1.len() {
                    if j2[b] >= j2[a] {
                        best = best.max(j1[a] - j1[b]);
                    }
                }
            }
            let range = j1.iter().copied().fold(f64::NEG_INFINITY, f64::max) - j1.iter().copied().fold(f64::INFINITY, f64::min);
            let got = regret_witness_search(&mdp, &r1, &r2, DEFAULT_POLICY_CAP).unwrap();
            assert_abs_diff_eq!(got.normalized_regret, best / range, epsilon = 1e-12);
        }
    }
}
