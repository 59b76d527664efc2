//! Checks of ε-robustness to misspecification over finite hypothesis sets,
//! plus constructive witnesses of non-robustness.

mod bound;
mod certificates;

pub use bound::{decompose_transformation, nudge_bound, verify_transformation_bound, ProbeReport, TransformBoundReport};
pub use certificates::{
    discount_counterexample, gridworld_demo, optimality_certificate, optimality_nonrobustness_witness,
    perturbation_counterexample, separation_witness_search, transition_counterexample, CertificateCheck,
    CertificateParams, CounterexampleCertificate, GridworldDemo, OptimalityWitness, Scenario, SeparationWitness,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{nested_reward, RewardFunction};
use crate::models::ModelTable;
use crate::starc::StarcMetric;

/// Default ℓ∞ tolerance for treating two policies as equal.
pub const DEFAULT_ETA: f64 = 1e-6;

/// STARC distances at or below `ε + DISTANCE_TOL` count as within `ε`.
pub const DISTANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NamedReward {
    id: String,
    #[serde(with = "nested_reward")]
    values: RewardFunction,
}

#[derive(Serialize, Deserialize)]
struct HypothesisFile {
    rewards: Vec<NamedReward>,
}

/// Finite, ordered set of candidate rewards with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HypothesisFile", into = "HypothesisFile")]
pub struct HypothesisSet {
    rewards: Vec<NamedReward>,
}

impl TryFrom<HypothesisFile> for HypothesisSet {
    type Error = Error;

    fn try_from(file: HypothesisFile) -> Result<Self> {
        HypothesisSet::new(file.rewards.into_iter().map(|r| (r.id, r.values)).collect())
    }
}

impl From<HypothesisSet> for HypothesisFile {
    fn from(set: HypothesisSet) -> Self {
        HypothesisFile { rewards: set.rewards }
    }
}

impl HypothesisSet {
    pub fn new(rewards: Vec<(String, RewardFunction)>) -> Result<Self> {
        let Some((_, first)) = rewards.first() else {
            return Err(Error::InvalidArgument("hypothesis set is empty".into()));
        };
        for (i, (id, r)) in rewards.iter().enumerate() {
            if rewards[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::InvalidArgument(format!("duplicate hypothesis id `{id}`")));
            }
            if !r.same_shape(first) {
                return Err(Error::Shape(format!("hypothesis `{id}` has a different shape from the first")));
            }
        }
        Ok(HypothesisSet {
            rewards: rewards.into_iter().map(|(id, values)| NamedReward { id, values }).collect(),
        })
    }

    /// Ids `r0, r1, ...` in order.
    pub fn from_rewards(rewards: Vec<RewardFunction>) -> Result<Self> {
        HypothesisSet::new(rewards.into_iter().enumerate().map(|(i, r)| (format!("r{i}"), r)).collect())
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.rewards[i].id
    }

    pub fn reward(&self, i: usize) -> &RewardFunction {
        &self.rewards[i].values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RewardFunction)> {
        self.rewards.iter().map(|r| (r.id.as_str(), &r.values))
    }
}

/// A failed condition of the robustness definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: u8,
    /// Reward ids involved; empty for condition 4.
    pub rewards: Vec<String>,
    /// STARC distance for conditions 1–2, policy gap for 3–4.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessVerdict {
    pub robust: bool,
    pub epsilon: f64,
    pub eta: f64,
    pub distance_tol: f64,
    pub violations: Vec<Violation>,
}

impl RobustnessVerdict {
    pub fn conditions(&self) -> Vec<u8> {
        self.violations.iter().map(|v| v.condition).collect()
    }
}

fn check_tables(f: &ModelTable, g: &ModelTable, set: &HypothesisSet) -> Result<()> {
    for (name, table) in [("f", f), ("g", g)] {
        if table.len() != set.len() || table.ids().zip(set.iter()).any(|(a, (b, _))| a != b) {
            return Err(Error::InvalidArgument(format!(
                "model table {name} was not materialized over this hypothesis set"
            )));
        }
    }
    Ok(())
}

/// Pairwise STARC distances over the hypothesis set, computed from one
/// standardization per reward.
struct DistanceCache {
    units: Vec<RewardFunction>,
}

impl DistanceCache {
    fn new(metric: &StarcMetric, set: &HypothesisSet) -> Result<Self> {
        let units = set
            .iter()
            .map(|(_, r)| metric.standardize(r).map(|s| s.unit))
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceCache { units })
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.units[i].as_slice(), self.units[j].as_slice());
        (0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()).min(1.0)
    }
}

struct Collisions {
    /// (condition, i, j, distance) for every colliding pair.
    pairs: Vec<(u8, usize, usize, f64)>,
    /// (j, min gap) for every g-policy without an f-match.
    unmatched: Vec<(usize, f64)>,
    /// Largest ‖f(R) − g(R)‖∞.
    max_self_gap: f64,
}

fn collisions(f: &ModelTable, g: &ModelTable, set: &HypothesisSet, dist: &DistanceCache, eta: f64) -> Collisions {
    let n = set.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if f.policy(i).linf_distance(g.policy(j)) <= eta {
                pairs.push((1, i, j, dist.get(i, j)));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if f.policy(i).linf_distance(f.policy(j)) <= eta {
                pairs.push((2, i, j, dist.get(i, j)));
            }
        }
    }
    let mut unmatched = Vec::new();
    for j in 0..n {
        let best = (0..n).map(|i| g.policy(j).linf_distance(f.policy(i))).fold(f64::INFINITY, f64::min);
        if best > eta {
            unmatched.push((j, best));
        }
    }
    let max_self_gap = (0..n).map(|i| f.policy(i).linf_distance(g.policy(i))).fold(0.0, f64::max);
    Collisions {
        pairs,
        unmatched,
        max_self_gap,
    }
}

/// Checks all four conditions over `set`, listing every violation. Policies
/// within `eta` in ℓ∞ count as equal.
pub fn check_epsilon_robust(
    f: &ModelTable,
    g: &ModelTable,
    set: &HypothesisSet,
    metric: &StarcMetric,
    epsilon: f64,
    eta: f64,
) -> Result<RobustnessVerdict> {
    check_tables(f, g, set)?;
    if !(eta >= 0.0) || !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument("epsilon and eta must be non-negative".into()));
    }
    let dist = DistanceCache::new(metric, set)?;
    let found = collisions(f, g, set, &dist, eta);

    let mut violations: Vec<Violation> = found
        .pairs
        .iter()
        .filter(|(_, _, _, d)| *d > epsilon + DISTANCE_TOL)
        .map(|&(condition, i, j, d)| Violation {
            condition,
            rewards: vec![set.id(i).to_string(), set.id(j).to_string()],
            value: d,
        })
        .collect();
    violations.extend(found.unmatched.iter().map(|&(j, gap)| Violation {
        condition: 3,
        rewards: vec![set.id(j).to_string()],
        value: gap,
    }));
    if found.max_self_gap <= eta {
        violations.push(Violation {
            condition: 4,
            rewards: Vec::new(),
            value: found.max_self_gap,
        });
    }
    Ok(RobustnessVerdict {
        robust: violations.is_empty(),
        epsilon,
        eta,
        distance_tol: DISTANCE_TOL,
        violations,
    })
}

/// Smallest `ε` meeting conditions 1 and 2, or `+∞` when condition 3 or 4
/// fails for every `ε`.
pub fn min_robust_epsilon(f: &ModelTable, g: &ModelTable, set: &HypothesisSet, metric: &StarcMetric, eta: f64) -> Result<f64> {
    check_tables(f, g, set)?;
    let dist = DistanceCache::new(metric, set)?;
    let found = collisions(f, g, set, &dist, eta);
    if !found.unmatched.is_empty() || found.max_self_gap <= eta {
        return Ok(f64::INFINITY);
    }
    Ok(found.pairs.iter().map(|p| p.3).fold(0.0, f64::max))
}

/// Pairs of `g`-collisions (ℓ∞ gap at most `eta`) whose distance exceeds `bound`.
pub fn g_collisions_beyond(g: &ModelTable, set: &HypothesisSet, metric: &StarcMetric, bound: f64, eta: f64) -> Result<Vec<Violation>> {
    if g.len() != set.len() {
        return Err(Error::InvalidArgument("model table does not match hypothesis set".into()));
    }
    let dist = DistanceCache::new(metric, set)?;
    let mut out = Vec::new();
    for i in 0..set.len() {
        for j in (i + 1)..set.len() {
            if g.policy(i).linf_distance(g.policy(j)) <= eta {
                let d = dist.get(i, j);
                if d > bound {
                    out.push(Violation {
                        condition: 2,
                        rewards: vec![set.id(i).to_string(), set.id(j).to_string()],
                        value: d,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// If `f` is ε-robust to misspecification with `g`, rewards that `g` maps to
/// the same policy are within `2ε` of each other. Errors when the verdict is
/// not robust, since the lemma then says nothing.
pub fn two_epsilon_lemma_check(
    f: &ModelTable,
    g: &ModelTable,
    set: &HypothesisSet,
    metric: &StarcMetric,
    epsilon: f64,
    eta: f64,
) -> Result<bool> {
    let verdict = check_epsilon_robust(f, g, set, metric, epsilon, eta)?;
    if !verdict.robust {
        return Err(Error::Precondition(format!(
            "f is not {epsilon}-robust to misspecification with g (violated conditions {:?})",
            verdict.conditions()
        )));
    }
    Ok(g_collisions_beyond(g, set, metric, 2.0 * epsilon + DISTANCE_TOL, eta)?.is_empty())
}
