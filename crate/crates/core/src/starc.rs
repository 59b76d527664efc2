//! STARC reward pseudometric: canonicalize, normalize, compare.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::mdp::{random_reward, RewardFunction, TabularMdp};
use crate::oracle::{regret_witness_search, RegretWitness, DEFAULT_POLICY_CAP};
use crate::transforms::InvarianceProjector;

/// Canonical norms at or below this are treated as zero.
pub fn zero_tol(mdp: &TabularMdp) -> f64 {
    1e-10 * mdp.reward_len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalReward {
    pub canonical: RewardFunction,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedReward {
    pub unit: RewardFunction,
}

impl StandardizedReward {
    pub fn is_zero(&self) -> bool {
        self.unit.as_slice().iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub distance: f64,
    pub canonical_norm_1: f64,
    pub canonical_norm_2: f64,
    pub cosine: f64,
}

/// STARC metric bound to one environment; the projector is built once and
/// reused for every comparison.
#[derive(Debug, Clone)]
pub struct StarcMetric {
    projector: InvarianceProjector,
    zero_tol: f64,
}

impl StarcMetric {
    pub fn new(mdp: &TabularMdp) -> Self {
        StarcMetric {
            projector: InvarianceProjector::new(mdp),
            zero_tol: zero_tol(mdp),
        }
    }

    pub fn with_zero_tol(mdp: &TabularMdp, zero_tol: f64) -> Self {
        StarcMetric {
            projector: InvarianceProjector::new(mdp),
            zero_tol,
        }
    }

    pub fn mdp(&self) -> &TabularMdp {
        self.projector.mdp()
    }

    pub fn projector(&self) -> &InvarianceProjector {
        &self.projector
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn canonicalize(&self, reward: &RewardFunction) -> Result<CanonicalReward> {
        self.mdp().check_reward(reward)?;
        let values = self.projector.canonical(reward.as_slice());
        let norm = norm(&values);
        Ok(CanonicalReward {
            canonical: RewardFunction::new(reward.n_states(), reward.n_actions(), values)?,
            norm,
        })
    }

    pub fn standardize(&self, reward: &RewardFunction) -> Result<StandardizedReward> {
        Ok(self.unit_of(self.canonicalize(reward)?))
    }

    fn unit_of(&self, c: CanonicalReward) -> StandardizedReward {
        let unit = if c.norm > self.zero_tol {
            c.canonical.scaled(1.0 / c.norm)
        } else {
            RewardFunction::zeros(c.canonical.n_states(), c.canonical.n_actions())
        };
        StandardizedReward { unit }
    }

    /// True when every policy has the same return under `reward`.
    pub fn is_trivial(&self, reward: &RewardFunction) -> Result<bool> {
        Ok(self.canonicalize(reward)?.norm <= self.zero_tol)
    }

    pub fn distance(&self, r1: &RewardFunction, r2: &RewardFunction) -> Result<MetricReport> {
        let c1 = self.canonicalize(r1)?;
        let c2 = self.canonicalize(r2)?;
        let (n1, n2) = (c1.norm, c2.norm);
        let u1 = self.unit_of(c1).unit;
        let u2 = self.unit_of(c2).unit;
        let gap: f64 = u1
            .as_slice()
            .iter()
            .zip(u2.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(MetricReport {
            distance: (0.5 * gap).min(1.0),
            canonical_norm_1: n1,
            canonical_norm_2: n2,
            cosine: dot(u1.as_slice(), u2.as_slice()),
        })
    }
}

impl StarcMetric {
    /// Two canonical unit rewards at exactly `distance`, built from seeded
    /// random directions.
    pub fn pair_at_distance(&self, seed: u64, distance: f64) -> Result<(RewardFunction, RewardFunction)> {
        if !(0.0..=1.0).contains(&distance) {
            return Err(Error::InvalidArgument(format!("distance must lie in [0, 1], got {distance}")));
        }
        let (n, na) = (self.mdp().n_states(), self.mdp().n_actions());
        let mut dirs = Vec::new();
        for k in 0..200 {
            let mut c = self.canonicalize(&random_reward(seed.wrapping_add(k), n, na, 1.0))?.canonical;
            for d in &dirs {
                c = c.add_scaled(-c.dot(d), d);
            }
            let len = c.norm();
            if len > 1e-6 {
                dirs.push(c.scaled(1.0 / len));
                if dirs.len() == 2 {
                    let theta = 2.0 * distance.asin();
                    let u2 = dirs[0].scaled(theta.cos()).add_scaled(theta.sin(), &dirs[1]);
                    return Ok((dirs[0].clone(), u2));
                }
            }
        }
        Err(Error::Precondition(
            "fewer than two independent canonical directions: rewards here are all trivial or proportional".into(),
        ))
    }
}

pub fn canonicalize(mdp: &TabularMdp, reward: &RewardFunction) -> Result<CanonicalReward> {
    StarcMetric::new(mdp).canonicalize(reward)
}

pub fn standardize(mdp: &TabularMdp, reward: &RewardFunction) -> Result<StandardizedReward> {
    StarcMetric::new(mdp).standardize(reward)
}

pub fn starc_distance(mdp: &TabularMdp, r1: &RewardFunction, r2: &RewardFunction) -> Result<MetricReport> {
    StarcMetric::new(mdp).distance(r1, r2)
}

/// Largest normalized regret of trusting `r2` when `r1` is the true reward,
/// over enumerated deterministic policies.
pub fn regret_gap(mdp: &TabularMdp, r1: &RewardFunction, r2: &RewardFunction) -> Result<RegretWitness> {
    regret_witness_search(mdp, r1, r2, DEFAULT_POLICY_CAP)
}
