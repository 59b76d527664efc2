use nalgebra::{DMatrix, DVector};

use super::{OccupancyMeasure, Policy, QTable, RewardFunction, TabularMdp, ValueTable};
use crate::error::{Error, Result};

/// Stopping rule for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Sup-norm Bellman residual at which iteration stops. Relative to
    /// `max(1, |V|_inf)` so large-magnitude rewards stay representable.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

/// Conditional mean reward `E_{S'~τ(s,a)}[R(s,a,S')]`, indexed `(s, a)`.
pub fn expected_reward(mdp: &TabularMdp, reward: &RewardFunction) -> Result<Vec<f64>> {
    mdp.check_reward(reward)?;
    Ok(mdp
        .transition()
        .chunks(mdp.n_states())
        .zip(reward.as_slice().chunks(mdp.n_states()))
        .map(|(p, r)| p.iter().zip(r).map(|(p, r)| p * r).sum())
        .collect())
}

fn backup(mdp: &TabularMdp, r_sa: &[f64], values: &[f64], out: &mut [f64]) {
    let gamma = mdp.discount();
    for (i, row) in mdp.transition().chunks(mdp.n_states()).enumerate() {
        let next: f64 = row.iter().zip(values).map(|(p, v)| p * v).sum();
        out[i] = r_sa[i] + gamma * next;
    }
}

/// `Q(s,a) = E[R(s,a,S') + γ V(S')]` for a given state-value vector.
pub fn q_from_values(mdp: &TabularMdp, reward: &RewardFunction, values: &ValueTable) -> Result<QTable> {
    if values.values.len() != mdp.n_states() {
        return Err(Error::Shape(format!(
            "value table has {} entries for {} states",
            values.values.len(),
            mdp.n_states()
        )));
    }
    let r_sa = expected_reward(mdp, reward)?;
    let mut q = vec![0.0; r_sa.len()];
    backup(mdp, &r_sa, &values.values, &mut q);
    Ok(QTable::new(mdp.n_states(), mdp.n_actions(), q))
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Exact `V^π` from the linear system `(I - γ P_π) V = r_π`.
pub fn policy_evaluation(mdp: &TabularMdp, reward: &RewardFunction, policy: &Policy) -> Result<ValueTable> {
    mdp.check_policy(policy)?;
    let r_sa = expected_reward(mdp, reward)?;
    let (n, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());

    let mut system = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for s in 0..n {
        for a in 0..na {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            rhs[s] += pa * r_sa[s * na + a];
            for (next, &p) in mdp.row(s, a).iter().enumerate() {
                system[(s, next)] -= gamma * pa * p;
            }
        }
    }
    let solution = system
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("policy evaluation system is singular".into()))?;

    let residual = sup_norm((&system * &solution - &rhs).as_slice());
    let scale = 1.0_f64.max(sup_norm(solution.as_slice()));
    if !(residual <= 1e-10 * scale) {
        return Err(Error::Numerical(format!(
            "policy evaluation residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(ValueTable {
        values: solution.as_slice().to_vec(),
    })
}

/// Expected discounted return `⟨μ0, V^π⟩`.
pub fn policy_return(mdp: &TabularMdp, reward: &RewardFunction, policy: &Policy) -> Result<f64> {
    let v = policy_evaluation(mdp, reward, policy)?;
    Ok(mdp.mu0().iter().zip(&v.values).map(|(m, v)| m * v).sum())
}

/// Sup-norm residual of the policy Bellman equation for `values`.
pub fn bellman_residual(mdp: &TabularMdp, reward: &RewardFunction, policy: &Policy, values: &ValueTable) -> Result<f64> {
    let q = q_from_values(mdp, reward, values)?;
    let na = mdp.n_actions();
    Ok((0..mdp.n_states())
        .map(|s| {
            let backed: f64 = (0..na).map(|a| policy.prob(s, a) * q.get(s, a)).sum();
            (values.values[s] - backed).abs()
        })
        .fold(0.0, f64::max))
}

pub fn optimal_values(mdp: &TabularMdp, reward: &RewardFunction) -> Result<(ValueTable, QTable)> {
    optimal_values_with(mdp, reward, SolverOptions::default())
}

/// Value iteration to a sup-norm fixed point. The greedy policy of the final
/// iterate is then evaluated exactly; when that evaluation is itself a fixed
/// point of the optimality operator it replaces the iterate, which removes
/// the geometric tail error of plain value iteration.
pub fn optimal_values_with(mdp: &TabularMdp, reward: &RewardFunction, opts: SolverOptions) -> Result<(ValueTable, QTable)> {
    let r_sa = expected_reward(mdp, reward)?;
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; n];
    let mut q = vec![0.0; n * na];
    let mut residual = f64::INFINITY;

    for _ in 0..opts.max_iters {
        backup(mdp, &r_sa, &v, &mut q);
        residual = 0.0;
        for s in 0..n {
            let best = q[s * na..(s + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - v[s]).abs());
            v[s] = best;
        }
        if residual < opts.tol * 1.0_f64.max(sup_norm(&v)) {
            backup(mdp, &r_sa, &v, &mut q);
            let polished = polish(mdp, reward, &r_sa, &q, opts.tol)?;
            let (v, q) = polished.unwrap_or((v, q));
            return Ok((ValueTable { values: v }, QTable::new(n, na, q)));
        }
    }
    Err(Error::NonConvergence {
        solver: "value iteration",
        iterations: opts.max_iters,
        residual,
    })
}

fn polish(
    mdp: &TabularMdp,
    reward: &RewardFunction,
    r_sa: &[f64],
    q: &[f64],
    tol: f64,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let greedy: Vec<usize> = (0..n).map(|s| argmax(&q[s * na..(s + 1) * na])).collect();
    let policy = Policy::deterministic(na, &greedy)?;
    let v = policy_evaluation(mdp, reward, &policy)?.values;
    let mut q_exact = vec![0.0; n * na];
    backup(mdp, r_sa, &v, &mut q_exact);
    let worst = (0..n)
        .map(|s| {
            let best = q_exact[s * na..(s + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - v[s]).abs()
        })
        .fold(0.0, f64::max);
    if worst < tol * 1.0_f64.max(sup_norm(&v)) {
        Ok(Some((v, q_exact)))
    } else {
        Ok(None)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Discounted `(s, a, s')` visitation of `policy` started from `μ0`.
pub fn occupancy_measure(mdp: &TabularMdp, policy: &Policy) -> Result<OccupancyMeasure> {
    mdp.check_policy(policy)?;
    let (n, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());

    // (I - γ P_π^T) d = μ0
    let mut system = DMatrix::<f64>::identity(n, n);
    for s in 0..n {
        for a in 0..na {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (next, &p) in mdp.row(s, a).iter().enumerate() {
                system[(next, s)] -= gamma * pa * p;
            }
        }
    }
    let rhs = DVector::from_column_slice(mdp.mu0());
    let visits = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("occupancy system is singular".into()))?;

    let mut mass = Vec::with_capacity(mdp.reward_len());
    for s in 0..n {
        for a in 0..na {
            let w = visits[s] * policy.prob(s, a);
            mass.extend(mdp.row(s, a).iter().map(|p| w * p));
        }
    }
    Ok(OccupancyMeasure::new(n, na, mass))
}
