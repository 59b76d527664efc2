//! Finite MDPs, reward tensors and policies, plus exact dynamic-programming
//! solvers and seeded instance generators.
//!
//! Every tensor indexed by `(s, a, s')` is stored flat in row-major order,
//! `index = (s * n_actions + a) * n_states + s'`. Policies are stored as
//! `(s, a)` tables in the same order.

mod dp;
pub mod envs;
mod generate;

pub use dp::{
    bellman_residual, expected_reward, optimal_values, optimal_values_with, occupancy_measure,
    policy_evaluation, policy_return, q_from_values, SolverOptions,
};
pub(crate) use dp::argmax as dp_argmax;
pub use generate::{random_mdp, random_policy, random_potential, random_reward, DEFAULT_DISCOUNT};

use std::collections::VecDeque;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability rows summing to one.
pub const PROB_TOL: f64 = 1e-9;

type Nested = Vec<Vec<Vec<f64>>>;

fn flatten_nested(nested: &Nested, n_states: usize, n_actions: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
    if nested.len() != n_states {
        return Err(format!("{what}: expected {n_states} state blocks, found {}", nested.len()));
    }
    let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
    for (s, block) in nested.iter().enumerate() {
        if block.len() != n_actions {
            return Err(format!("{what}[{s}]: expected {n_actions} actions, found {}", block.len()));
        }
        for (a, row) in block.iter().enumerate() {
            if row.len() != n_states {
                return Err(format!("{what}[{s}][{a}]: expected {n_states} entries, found {}", row.len()));
            }
            flat.extend_from_slice(row);
        }
    }
    Ok(flat)
}

fn nest(flat: &[f64], n_states: usize, n_actions: usize) -> Nested {
    flat.chunks(n_states)
        .collect::<Vec<_>>()
        .chunks(n_actions)
        .map(|rows| rows.iter().map(|r| r.to_vec()).collect())
        .collect()
}

/// Finite environment: transition kernel, initial distribution and discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpFile", into = "MdpFile")]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    mu0: Vec<f64>,
    discount: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct MdpFile {
    n_states: usize,
    n_actions: usize,
    discount: f64,
    mu0: Vec<f64>,
    transition: Nested,
}

impl TryFrom<MdpFile> for TabularMdp {
    type Error = Error;

    fn try_from(file: MdpFile) -> Result<Self> {
        TabularMdp::from_nested(file.n_states, file.n_actions, &file.transition, file.mu0, file.discount)
    }
}

impl From<TabularMdp> for MdpFile {
    fn from(mdp: TabularMdp) -> Self {
        MdpFile {
            transition: nest(&mdp.transition, mdp.n_states, mdp.n_actions),
            n_states: mdp.n_states,
            n_actions: mdp.n_actions,
            discount: mdp.discount,
            mu0: mdp.mu0,
        }
    }
}

impl TabularMdp {
    /// Builds an MDP from a flat `(s, a, s')` transition tensor, validating every
    /// invariant and reporting the first one violated.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        mu0: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidMdp("n_states must be positive".into()));
        }
        if n_actions == 0 {
            return Err(Error::InvalidMdp("n_actions must be positive".into()));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::InvalidMdp(format!("discount must lie in (0, 1), got {discount}")));
        }
        if mu0.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "mu0: expected {n_states} entries, found {}",
                mu0.len()
            )));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::InvalidMdp(format!(
                "transition: expected {} entries, found {}",
                n_states * n_actions * n_states,
                transition.len()
            )));
        }
        for (i, row) in transition.chunks(n_states).enumerate() {
            let (s, a) = (i / n_actions, i % n_actions);
            check_distribution(row).map_err(|e| Error::InvalidMdp(format!("transition[{s}][{a}]: {e}")))?;
        }
        check_distribution(&mu0).map_err(|e| Error::InvalidMdp(format!("mu0: {e}")))?;
        let mdp = TabularMdp {
            n_states,
            n_actions,
            transition,
            mu0,
            discount,
        };
        if let Some(s) = mdp.first_unreachable_state() {
            return Err(Error::InvalidMdp(format!("state {s} is unreachable from mu0")));
        }
        Ok(mdp)
    }

    /// Builds an MDP from nested `[s][a][s']` arrays.
    pub fn from_nested(
        n_states: usize,
        n_actions: usize,
        transition: &[Vec<Vec<f64>>],
        mu0: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return TabularMdp::new(n_states, n_actions, Vec::new(), mu0, discount);
        }
        let flat = flatten_nested(&transition.to_vec(), n_states, n_actions, "transition").map_err(Error::InvalidMdp)?;
        TabularMdp::new(n_states, n_actions, flat, mu0, discount)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    /// Flat transition tensor.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// Next-state distribution `τ(s, a, ·)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.index(s, a, next)]
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + next
    }

    /// Length of a reward tensor over this MDP.
    pub fn reward_len(&self) -> usize {
        self.n_states * self.n_actions * self.n_states
    }

    /// Same dynamics with a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        TabularMdp::new(
            self.n_states,
            self.n_actions,
            self.transition.clone(),
            self.mu0.clone(),
            discount,
        )
    }

    /// True when every state has identical next-state distributions for all actions.
    pub fn has_trivial_dynamics(&self) -> bool {
        (0..self.n_states).all(|s| {
            let first = self.row(s, 0);
            (1..self.n_actions).all(|a| max_abs_diff(first, self.row(s, a)) <= PROB_TOL)
        })
    }

    /// True when the other MDP has the same state and action sets.
    pub fn same_shape(&self, other: &TabularMdp) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    pub(crate) fn check_reward(&self, reward: &RewardFunction) -> Result<()> {
        if reward.n_states != self.n_states || reward.n_actions != self.n_actions {
            return Err(Error::Shape(format!(
                "reward is {}x{} but the MDP has {} states and {} actions",
                reward.n_states, reward.n_actions, self.n_states, self.n_actions
            )));
        }
        Ok(())
    }

    pub(crate) fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.n_states != self.n_states || policy.n_actions != self.n_actions {
            return Err(Error::Shape(format!(
                "policy is {}x{} but the MDP has {} states and {} actions",
                policy.n_states, policy.n_actions, self.n_states, self.n_actions
            )));
        }
        Ok(())
    }

    fn first_unreachable_state(&self) -> Option<usize> {
        let mut seen = vec![false; self.n_states];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for (s, &p) in self.mu0.iter().enumerate() {
            if p > 0.0 {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for a in 0..self.n_actions {
                for (next, &p) in self.row(s, a).iter().enumerate() {
                    if p > 0.0 && !seen[next] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
        seen.iter().position(|&r| !r)
    }
}

fn check_distribution(p: &[f64]) -> std::result::Result<(), String> {
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(format!("entry {i} is not finite ({v})"));
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(format!("entry {i} is negative ({v})"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Real-valued reward over `(s, a, s')` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RewardFile", into = "RewardFile")]
pub struct RewardFunction {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RewardFile {
    values: Nested,
}

impl TryFrom<RewardFile> for RewardFunction {
    type Error = Error;

    fn try_from(file: RewardFile) -> Result<Self> {
        RewardFunction::from_nested(&file.values)
    }
}

impl From<RewardFunction> for RewardFile {
    fn from(r: RewardFunction) -> Self {
        RewardFile { values: r.to_nested() }
    }
}

impl RewardFunction {
    pub fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidReward("reward needs at least one state and one action".into()));
        }
        if values.len() != n_states * n_actions * n_states {
            return Err(Error::InvalidReward(format!(
                "expected {} entries, found {}",
                n_states * n_actions * n_states,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidReward(format!("entry {i} is not finite")));
        }
        Ok(RewardFunction {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        RewardFunction {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions * n_states],
        }
    }

    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions * n_states);
        for s in 0..n_states {
            for a in 0..n_actions {
                for next in 0..n_states {
                    values.push(f(s, a, next));
                }
            }
        }
        RewardFunction {
            n_states,
            n_actions,
            values,
        }
    }

    /// Parses nested `[s][a][s']` arrays; the state count is the outer length.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = nested.len();
        let n_actions = nested.first().map_or(0, Vec::len);
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidReward("reward needs at least one state and one action".into()));
        }
        let flat = flatten_nested(&nested.to_vec(), n_states, n_actions, "values").map_err(Error::InvalidReward)?;
        RewardFunction::new(n_states, n_actions, flat)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        nest(&self.values, self.n_states, self.n_actions)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, s: usize, a: usize, next: usize) -> f64 {
        self.values[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn set(&mut self, s: usize, a: usize, next: usize, value: f64) {
        self.values[(s * self.n_actions + a) * self.n_states + next] = value;
    }

    /// Slice `R(s, a, ·)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.values[start..start + self.n_states]
    }

    pub fn row_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &mut self.values[start..start + self.n_states]
    }

    pub fn same_shape(&self, other: &RewardFunction) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &RewardFunction) -> f64 {
        assert!(self.same_shape(other), "reward shapes differ");
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &RewardFunction) -> f64 {
        assert!(self.same_shape(other), "reward shapes differ");
        max_abs_diff(&self.values, &other.values)
    }

    pub fn scaled(&self, c: f64) -> RewardFunction {
        self.map(|v| v * c)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &RewardFunction) -> RewardFunction {
        assert!(self.same_shape(other), "reward shapes differ");
        RewardFunction {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> RewardFunction {
        RewardFunction {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Add<&RewardFunction> for &RewardFunction {
    type Output = RewardFunction;

    fn add(self, rhs: &RewardFunction) -> RewardFunction {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub<&RewardFunction> for &RewardFunction {
    type Output = RewardFunction;

    fn sub(self, rhs: &RewardFunction) -> RewardFunction {
        self.add_scaled(-1.0, rhs)
    }
}

impl Neg for &RewardFunction {
    type Output = RewardFunction;

    fn neg(self) -> RewardFunction {
        self.map(|v| -v)
    }
}

impl Mul<f64> for &RewardFunction {
    type Output = RewardFunction;

    fn mul(self, c: f64) -> RewardFunction {
        self.scaled(c)
    }
}

/// Serde adapter writing a reward as bare nested `[s][a][s']` arrays.
pub(crate) mod nested_reward {
    use super::RewardFunction;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &RewardFunction, ser: S) -> Result<S::Ok, S::Error> {
        r.to_nested().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<RewardFunction, D::Error> {
        let nested = Vec::<Vec<Vec<f64>>>::deserialize(de)?;
        RewardFunction::from_nested(&nested).map_err(D::Error::custom)
    }
}

/// Stochastic policy `π(a | s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyFile", into = "PolicyFile")]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct PolicyFile {
    probs: Vec<Vec<f64>>,
}

impl TryFrom<PolicyFile> for Policy {
    type Error = Error;

    fn try_from(file: PolicyFile) -> Result<Self> {
        Policy::from_rows(&file.probs)
    }
}

impl From<Policy> for PolicyFile {
    fn from(p: Policy) -> Self {
        PolicyFile {
            probs: p.probs.chunks(p.n_actions).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidPolicy("policy needs at least one state and one action".into()));
        }
        if probs.len() != n_states * n_actions {
            return Err(Error::InvalidPolicy(format!(
                "expected {} entries, found {}",
                n_states * n_actions,
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_distribution(row).map_err(|e| Error::InvalidPolicy(format!("row {s}: {e}")))?;
        }
        Ok(Policy {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if let Some(s) = rows.iter().position(|r| r.len() != n_actions) {
            return Err(Error::InvalidPolicy(format!("row {s} has the wrong number of actions")));
        }
        Policy::new(rows.len(), n_actions, rows.concat())
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Deterministic policy taking `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidPolicy(format!("action {a} out of range in state {s}")));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Policy::new(actions.len(), n_actions, probs)
    }

    pub(crate) fn from_raw(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), n_states * n_actions);
        Policy {
            n_states,
            n_actions,
            probs,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn same_shape(&self, other: &Policy) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    pub fn linf_distance(&self, other: &Policy) -> f64 {
        assert!(self.same_shape(other), "policy shapes differ");
        max_abs_diff(&self.probs, &other.probs)
    }

    pub fn l2_distance(&self, other: &Policy) -> f64 {
        assert!(self.same_shape(other), "policy shapes differ");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// State values `V(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub values: Vec<f64>,
}

/// Action values `Q(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub(crate) fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n_states * n_actions);
        QTable {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discounted expected visitation of `(s, a, s')` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    n_states: usize,
    n_actions: usize,
    mass: Vec<f64>,
}

impl OccupancyMeasure {
    pub(crate) fn new(n_states: usize, n_actions: usize, mass: Vec<f64>) -> Self {
        OccupancyMeasure {
            n_states,
            n_actions,
            mass,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, s: usize, a: usize, next: usize) -> f64 {
        self.mass[(s * self.n_actions + a) * self.n_states + next]
    }

    /// Total mass; `1 / (1 - γ)` for a valid measure.
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `⟨m, R⟩`, the expected discounted return of the generating policy.
    pub fn dot(&self, reward: &RewardFunction) -> f64 {
        assert_eq!(self.mass.len(), reward.as_slice().len(), "occupancy and reward shapes differ");
        self.mass.iter().zip(reward.as_slice()).map(|(m, r)| m * r).sum()
    }

    /// Marginal over next states, indexed `(s, a)`.
    pub fn state_action(&self) -> Vec<f64> {
        self.mass.chunks(self.n_states).map(|row| row.iter().sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> TabularMdp {
        TabularMdp::new(2, 1, vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0], 0.9).unwrap()
    }

    #[test]
    fn rejects_bad_rows_with_location() {
        let err = TabularMdp::new(2, 1, vec![0.5, 0.4, 1.0, 0.0], vec![1.0, 0.0], 0.9).unwrap_err();
        assert!(err.to_string().contains("transition[0][0]"), "{err}");
        let err = TabularMdp::new(2, 1, vec![-0.1, 1.1, 1.0, 0.0], vec![1.0, 0.0], 0.9).unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");
    }

    #[test]
    fn rejects_unreachable_states() {
        // state 1 is never entered
        let err = TabularMdp::new(2, 1, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0], 0.9).unwrap_err();
        assert!(err.to_string().contains("unreachable"), "{err}");
        assert!(two_state().n_states() == 2);
    }

    #[test]
    fn rejects_bad_discount_and_mu0() {
        assert!(TabularMdp::new(1, 1, vec![1.0], vec![1.0], 1.0).is_err());
        assert!(TabularMdp::new(1, 1, vec![1.0], vec![1.0], 0.0).is_err());
        let err = TabularMdp::new(1, 1, vec![1.0], vec![0.5], 0.5).unwrap_err();
        assert!(err.to_string().contains("mu0"), "{err}");
    }

    #[test]
    fn json_round_trip_and_first_violation() {
        let mdp = two_state();
        let text = serde_json::to_string(&mdp).unwrap();
        assert!(text.contains("\"transition\":[[[0.0,1.0]],[[1.0,0.0]]]"), "{text}");
        let back: TabularMdp = serde_json::from_str(&text).unwrap();
        assert_eq!(back, mdp);

        let bad = r#"{"n_states":2,"n_actions":1,"discount":0.9,"mu0":[1,0],"transition":[[[0.0,1.0]],[[0.3,0.3]]]}"#;
        let err = serde_json::from_str::<TabularMdp>(bad).unwrap_err();
        assert!(err.to_string().contains("transition[1][0]"), "{err}");
    }

    #[test]
    fn reward_json_and_arithmetic() {
        let r = RewardFunction::from_fn(2, 1, |s, _, n| (s * 2 + n) as f64);
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"values":[[[0.0,1.0]],[[2.0,3.0]]]}"#);
        let back: RewardFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let doubled = &r + &r;
        assert_eq!(doubled, &r * 2.0);
        assert_eq!((&doubled - &r), r);
        assert_eq!((-&r).get(1, 0, 1), -3.0);
        assert!(serde_json::from_str::<RewardFunction>(r#"{"values":[[[1.0]],[[1.0,2.0]]]}"#).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(Policy::new(1, 2, vec![0.5, 0.6]).is_err());
        let p = Policy::deterministic(3, &[2, 0]).unwrap();
        assert_eq!(p.row(0), &[0.0, 0.0, 1.0]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"probs":[[0.0,0.0,1.0],[1.0,0.0,0.0]]}"#);
        let u = Policy::uniform(2, 3);
        assert!((p.linf_distance(&u) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trivial_dynamics_detection() {
        let t = TabularMdp::new(1, 2, vec![1.0, 1.0], vec![1.0], 0.5).unwrap();
        assert!(t.has_trivial_dynamics());
        assert!(!envs::three_state_chain(0.9).unwrap().has_trivial_dynamics());
    }
}
