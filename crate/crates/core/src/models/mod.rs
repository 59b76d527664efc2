//! Behavioural models: total maps from rewards to policies.

mod registry;

pub use registry::{ModelConstructor, ModelRegistry};

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{expected_reward, optimal_values_with, Policy, QTable, RewardFunction, SolverOptions, TabularMdp};
use crate::robustness::HypothesisSet;

/// A behavioural model maps a reward to the policy an agent would follow.
pub trait BehavioralModel: Debug + Send + Sync {
    /// Registry name, e.g. `"boltzmann"`.
    fn name(&self) -> &'static str;

    fn spec(&self) -> ModelSpec;

    fn policy(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<Policy>;

    /// Whether the policy depends continuously on the reward.
    fn is_continuous(&self) -> bool {
        false
    }

    /// Overrides the dynamic-programming tolerances. Models without a solver
    /// ignore this.
    fn set_solver(&mut self, _opts: SolverOptions) {}
}

/// Serializable model description: `{"kind":"boltzmann","beta":1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    OptimalUniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
    },
    Boltzmann {
        beta: f64,
    },
    Mce {
        alpha: f64,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::OptimalUniform { .. } => OptimalUniform::NAME,
            ModelSpec::Boltzmann { .. } => Boltzmann::NAME,
            ModelSpec::Mce { .. } => MaxCausalEntropy::NAME,
        }
    }

    /// Builds the model through the built-in registry.
    pub fn build(&self) -> Result<Box<dyn BehavioralModel>> {
        ModelRegistry::with_builtins().build_spec(self)
    }
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Uniform over the actions whose `Q*` is within `κ` of the best.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalUniform {
    kappa: Option<f64>,
    solver: SolverOptions,
}

impl OptimalUniform {
    pub const NAME: &'static str = "optimal_uniform";

    pub fn new(kappa: Option<f64>) -> Result<Self> {
        if let Some(k) = kappa {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidArgument(format!("kappa must be non-negative, got {k}")));
            }
        }
        Ok(OptimalUniform {
            kappa,
            solver: SolverOptions::default(),
        })
    }
}

impl BehavioralModel for OptimalUniform {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::OptimalUniform { kappa: self.kappa }
    }

    fn policy(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<Policy> {
        optimal_policy_uniform_with(mdp, reward, self.kappa, self.solver)
    }

    fn set_solver(&mut self, opts: SolverOptions) {
        self.solver = opts;
    }
}

/// Softmax of `β Q*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boltzmann {
    beta: f64,
    solver: SolverOptions,
}

impl Boltzmann {
    pub const NAME: &'static str = "boltzmann";

    pub fn new(beta: f64) -> Result<Self> {
        Ok(Boltzmann {
            beta: positive("beta", beta)?,
            solver: SolverOptions::default(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl BehavioralModel for Boltzmann {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::Boltzmann { beta: self.beta }
    }

    fn policy(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<Policy> {
        boltzmann_policy_with(mdp, reward, self.beta, self.solver)
    }

    fn is_continuous(&self) -> bool {
        true
    }

    fn set_solver(&mut self, opts: SolverOptions) {
        self.solver = opts;
    }
}

/// Maximal causal entropy policy with entropy weight `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxCausalEntropy {
    alpha: f64,
    solver: SolverOptions,
}

impl MaxCausalEntropy {
    pub const NAME: &'static str = "mce";

    pub fn new(alpha: f64) -> Result<Self> {
        Ok(MaxCausalEntropy {
            alpha: positive("alpha", alpha)?,
            solver: SolverOptions::default(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl BehavioralModel for MaxCausalEntropy {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::Mce { alpha: self.alpha }
    }

    fn policy(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<Policy> {
        mce_policy_with(mdp, reward, self.alpha, self.solver)
    }

    fn is_continuous(&self) -> bool {
        true
    }

    fn set_solver(&mut self, opts: SolverOptions) {
        self.solver = opts;
    }
}

/// Default argmax tolerance `1e-8 (1 + ‖Q*‖∞)`.
pub fn default_kappa(q: &QTable) -> f64 {
    1e-8 * (1.0 + q.max_abs())
}

pub fn optimal_policy_uniform(mdp: &TabularMdp, reward: &RewardFunction, kappa: Option<f64>) -> Result<Policy> {
    optimal_policy_uniform_with(mdp, reward, kappa, SolverOptions::default())
}

pub fn optimal_policy_uniform_with(
    mdp: &TabularMdp,
    reward: &RewardFunction,
    kappa: Option<f64>,
    opts: SolverOptions,
) -> Result<Policy> {
    let (_, q) = optimal_values_with(mdp, reward, opts)?;
    let kappa = match kappa {
        Some(k) if !(k >= 0.0) => return Err(Error::InvalidArgument(format!("kappa must be non-negative, got {k}"))),
        Some(k) => k,
        None => default_kappa(&q),
    };
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let mut probs = Vec::with_capacity(n * na);
    for s in 0..n {
        let row = q.row(s);
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let chosen: Vec<bool> = row.iter().map(|&v| v >= best - kappa).collect();
        let count = chosen.iter().filter(|&&c| c).count() as f64;
        probs.extend(chosen.iter().map(|&c| if c { 1.0 / count } else { 0.0 }));
    }
    Ok(Policy::from_raw(n, na, probs))
}

fn softmax_rows(logits: &[f64], n_actions: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(n_actions) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / total));
    }
    out
}

pub fn boltzmann_policy(mdp: &TabularMdp, reward: &RewardFunction, beta: f64) -> Result<Policy> {
    boltzmann_policy_with(mdp, reward, beta, SolverOptions::default())
}

pub fn boltzmann_policy_with(mdp: &TabularMdp, reward: &RewardFunction, beta: f64, opts: SolverOptions) -> Result<Policy> {
    positive("beta", beta)?;
    let (_, q) = optimal_values_with(mdp, reward, opts)?;
    let logits: Vec<f64> = q.as_slice().iter().map(|&v| beta * v).collect();
    Ok(Policy::from_raw(mdp.n_states(), mdp.n_actions(), softmax_rows(&logits, mdp.n_actions())))
}

pub fn mce_policy(mdp: &TabularMdp, reward: &RewardFunction, alpha: f64) -> Result<Policy> {
    mce_policy_with(mdp, reward, alpha, SolverOptions::default())
}

/// Soft value iteration for `V(s) = α log Σ_a exp(Q(s,a)/α)`, followed by a
/// few Newton steps on the same fixed-point equation to remove the geometric
/// tail error.
pub fn mce_policy_with(mdp: &TabularMdp, reward: &RewardFunction, alpha: f64, opts: SolverOptions) -> Result<Policy> {
    positive("alpha", alpha)?;
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let solver = SoftBellman {
        mdp,
        r_sa: expected_reward(mdp, reward)?,
        alpha,
    };
    let mut v = vec![0.0; n];
    let mut q = vec![0.0; n * na];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let next = solver.apply(&v, &mut q);
        residual = sup_diff(&next, &v);
        v = next;
        if residual < opts.tol * 1.0_f64.max(sup_abs(&v)) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            solver: "soft value iteration",
            iterations: opts.max_iters,
            residual,
        });
    }

    for _ in 0..3 {
        let Some(better) = solver.newton_step(&v)? else { break };
        v = better;
    }
    solver.apply(&v, &mut q);
    let logits: Vec<f64> = q.iter().map(|&x| x / alpha).collect();
    Ok(Policy::from_raw(n, na, softmax_rows(&logits, na)))
}

struct SoftBellman<'a> {
    mdp: &'a TabularMdp,
    r_sa: Vec<f64>,
    alpha: f64,
}

impl SoftBellman<'_> {
    /// One soft backup. Writes `Q` and returns the new `V`.
    fn apply(&self, v: &[f64], q: &mut [f64]) -> Vec<f64> {
        let (n, na, gamma) = (self.mdp.n_states(), self.mdp.n_actions(), self.mdp.discount());
        for (i, row) in self.mdp.transition().chunks(n).enumerate() {
            let next: f64 = row.iter().zip(v).map(|(p, x)| p * x).sum();
            q[i] = self.r_sa[i] + gamma * next;
        }
        q.chunks(na)
            .map(|row| {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|&x| ((x - max) / self.alpha).exp()).sum();
                max + self.alpha * sum.ln()
            })
            .collect()
    }

    /// Newton step on `T(V) − V = 0`; the Jacobian of `T` is `γ P_π` for the
    /// current softmax policy. Returns `None` unless the residual shrinks.
    fn newton_step(&self, v: &[f64]) -> Result<Option<Vec<f64>>> {
        let (n, na, gamma) = (self.mdp.n_states(), self.mdp.n_actions(), self.mdp.discount());
        let mut q = vec![0.0; n * na];
        let tv = self.apply(v, &mut q);
        let res: Vec<f64> = tv.iter().zip(v).map(|(a, b)| a - b).collect();
        let before = sup_abs(&res);
        if before == 0.0 {
            return Ok(None);
        }
        let logits: Vec<f64> = q.iter().map(|&x| x / self.alpha).collect();
        let pi = softmax_rows(&logits, na);
        let mut system = DMatrix::<f64>::identity(n, n);
        for s in 0..n {
            for a in 0..na {
                let w = pi[s * na + a];
                for (next, &p) in self.mdp.row(s, a).iter().enumerate() {
                    system[(s, next)] -= gamma * w * p;
                }
            }
        }
        let Some(step) = system.lu().solve(&DVector::from_vec(res)) else {
            return Ok(None);
        };
        let candidate: Vec<f64> = v.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let after = sup_diff(&self.apply(&candidate, &mut q), &candidate);
        Ok((after < before).then_some(candidate))
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// A model paired with the environment it is evaluated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralModelSpec {
    pub model: ModelSpec,
    pub environment: TabularMdp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTableEntry {
    pub id: String,
    pub policy: Policy,
}

/// A model materialized over a finite hypothesis set, in hypothesis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTable {
    pub model: ModelSpec,
    pub entries: Vec<ModelTableEntry>,
}

impl ModelTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn policy(&self, i: usize) -> &Policy {
        &self.entries[i].policy
    }

    pub fn get(&self, id: &str) -> Option<&Policy> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.policy)
    }
}

pub fn materialize_model(spec: &BehavioralModelSpec, hypotheses: &HypothesisSet) -> Result<ModelTable> {
    let model = spec.model.build()?;
    materialize_with(model.as_ref(), &spec.environment, hypotheses)
}

/// Applies `model` to every hypothesis. Failures carry the reward id.
pub fn materialize_with(model: &dyn BehavioralModel, env: &TabularMdp, hypotheses: &HypothesisSet) -> Result<ModelTable> {
    let entries = hypotheses
        .iter()
        .map(|(id, reward)| {
            model
                .policy(env, reward)
                .map(|policy| ModelTableEntry { id: id.to_string(), policy })
                .map_err(|e| Error::Model {
                    id: id.to_string(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelTable {
        model: model.spec(),
        entries,
    })
}
