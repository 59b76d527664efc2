//! Self-contained records of non-robustness: two rewards that a behavioural
//! model cannot tell apart in one environment, yet which are far apart when
//! evaluated in another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::envs::{grid_dx, gridworld, GridAction};
use crate::mdp::{nested_reward, optimal_values, random_reward, Policy, RewardFunction, TabularMdp};
use crate::models::{BehavioralModel, ModelSpec, OptimalUniform};
use crate::policy_metric::PolicyMetricSpec;
use crate::robustness::DEFAULT_ETA;
use crate::starc::StarcMetric;
use crate::transforms::{
    invisible_reward_discount, invisible_reward_transition, min_norm_two_constraints, random_potential_function,
    shaping_reward,
};

/// Recomputed quantities must match stored ones within this.
pub const RECOMPUTE_TOL: f64 = 1e-8;

/// Largest deviation of the certified distance from 1 for the constructions
/// that negate a reward's canonical part.
const UNIT_DISTANCE_TOL: f64 = 1e-6;

/// Distance an optimality witness must exceed.
const OPTIMALITY_MIN_DISTANCE: f64 = 1e-3;

const OPTIMALITY_SAMPLES: u64 = 100;
const BISECTION_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Discount,
    Transition,
    Perturbation,
    Optimality,
}

/// Construction parameters; only those relevant to the scenario are set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ids: Option<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Scale of the canonical part found by bisection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Two rewards, the environment in which `model` sees them, and the
/// environment in which they are compared. All inputs are stored by value so
/// the measurements can be recomputed by anyone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCertificate {
    pub scenario: Scenario,
    pub model: ModelSpec,
    pub model_env: TabularMdp,
    pub eval_env: TabularMdp,
    #[serde(with = "nested_reward")]
    pub reward_1: RewardFunction,
    #[serde(with = "nested_reward")]
    pub reward_2: RewardFunction,
    pub policy_metric: PolicyMetricSpec,
    /// Distance between the two model policies under `policy_metric`.
    pub policy_gap: f64,
    pub policy_gap_linf: f64,
    /// STARC distance of the two rewards in `eval_env`.
    pub starc_distance: f64,
    pub params: CertificateParams,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub policy_gap: f64,
    pub policy_gap_linf: f64,
    pub starc_distance: f64,
    /// Largest absolute difference from the stored values.
    pub max_deviation: f64,
    pub reproducible: bool,
}

struct Measured {
    policy_gap: f64,
    policy_gap_linf: f64,
    starc_distance: f64,
}

fn measure(
    model: &dyn BehavioralModel,
    model_env: &TabularMdp,
    eval_env: &TabularMdp,
    metric: PolicyMetricSpec,
    r1: &RewardFunction,
    r2: &RewardFunction,
) -> Result<Measured> {
    let p1 = model.policy(model_env, r1)?;
    let p2 = model.policy(model_env, r2)?;
    Ok(Measured {
        policy_gap: metric.distance(model_env, &p1, &p2)?,
        policy_gap_linf: p1.linf_distance(&p2),
        starc_distance: StarcMetric::new(eval_env).distance(r1, r2)?.distance,
    })
}

impl CounterexampleCertificate {
    #[allow(clippy::too_many_arguments)]
    fn build(
        scenario: Scenario,
        model: &dyn BehavioralModel,
        model_env: TabularMdp,
        eval_env: TabularMdp,
        reward_1: RewardFunction,
        reward_2: RewardFunction,
        policy_metric: PolicyMetricSpec,
        params: CertificateParams,
        description: String,
    ) -> Result<Self> {
        let m = measure(model, &model_env, &eval_env, policy_metric, &reward_1, &reward_2)?;
        Ok(CounterexampleCertificate {
            scenario,
            model: model.spec(),
            model_env,
            eval_env,
            reward_1,
            reward_2,
            policy_metric,
            policy_gap: m.policy_gap,
            policy_gap_linf: m.policy_gap_linf,
            starc_distance: m.starc_distance,
            params,
            description,
        })
    }

    /// Recomputes every measurement from the stored inputs.
    pub fn verify(&self) -> Result<CertificateCheck> {
        let model = self.model.build()?;
        let m = measure(
            model.as_ref(),
            &self.model_env,
            &self.eval_env,
            self.policy_metric,
            &self.reward_1,
            &self.reward_2,
        )?;
        let max_deviation = [
            (m.policy_gap - self.policy_gap).abs(),
            (m.policy_gap_linf - self.policy_gap_linf).abs(),
            (m.starc_distance - self.starc_distance).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        Ok(CertificateCheck {
            policy_gap: m.policy_gap,
            policy_gap_linf: m.policy_gap_linf,
            starc_distance: m.starc_distance,
            max_deviation,
            reproducible: max_deviation <= RECOMPUTE_TOL,
        })
    }

    /// Whether the stored measurements establish the scenario's claim: the
    /// policies are indistinguishable (below `δ` for perturbations, `η`
    /// otherwise) while the rewards are maximally far apart, or merely
    /// distinct for the optimality scenario.
    pub fn holds(&self) -> bool {
        match self.scenario {
            Scenario::Perturbation => {
                self.policy_gap < self.params.delta.unwrap_or(0.0) && (self.starc_distance - 1.0).abs() <= UNIT_DISTANCE_TOL
            }
            Scenario::Discount | Scenario::Transition => {
                self.policy_gap_linf < self.params.eta && (self.starc_distance - 1.0).abs() <= UNIT_DISTANCE_TOL
            }
            Scenario::Optimality => self.policy_gap_linf < self.params.eta && self.starc_distance > OPTIMALITY_MIN_DISTANCE,
        }
    }
}

/// `(R†, −R†)` where `R†` is a `γ1`-shaping reward that stays non-trivial
/// under `γ2`. Any shaping-invariant model cannot tell them apart under `γ1`.
pub fn discount_counterexample(tau: &TabularMdp, gamma1: f64, gamma2: f64, model: &ModelSpec) -> Result<CounterexampleCertificate> {
    let dagger = invisible_reward_discount(tau, gamma1, gamma2)?;
    let built = model.build()?;
    CounterexampleCertificate::build(
        Scenario::Discount,
        built.as_ref(),
        tau.with_discount(gamma1)?,
        tau.with_discount(gamma2)?,
        dagger.clone(),
        -&dagger,
        PolicyMetricSpec::Linf,
        CertificateParams {
            gamma1: Some(gamma1),
            gamma2: Some(gamma2),
            eta: DEFAULT_ETA,
            ..Default::default()
        },
        format!("potential shaping under discount {gamma1} evaluated under discount {gamma2}"),
    )
}

/// `(R†, −R†)` where `R†` has zero conditional mean under `tau1` but not
/// under `tau2`.
pub fn transition_counterexample(
    tau1: &TabularMdp,
    tau2: &TabularMdp,
    gamma: f64,
    model: &ModelSpec,
    tau_ids: (&str, &str),
) -> Result<CounterexampleCertificate> {
    let dagger = invisible_reward_transition(tau1, tau2, gamma)?;
    let built = model.build()?;
    CounterexampleCertificate::build(
        Scenario::Transition,
        built.as_ref(),
        tau1.with_discount(gamma)?,
        tau2.with_discount(gamma)?,
        dagger.clone(),
        -&dagger,
        PolicyMetricSpec::Linf,
        CertificateParams {
            gamma1: Some(gamma),
            tau_ids: Some((tau_ids.0.to_string(), tau_ids.1.to_string())),
            eta: DEFAULT_ETA,
            ..Default::default()
        },
        format!("redistribution under `{}` evaluated under `{}`", tau_ids.0, tau_ids.1),
    )
}

fn unit_canonical(metric: &StarcMetric, seed: u64) -> Result<RewardFunction> {
    let mdp = metric.mdp();
    for k in 0..100 {
        let c = metric.canonicalize(&random_reward(seed.wrapping_add(k), mdp.n_states(), mdp.n_actions(), 1.0))?;
        if c.norm > metric.zero_tol() {
            return Ok(c.canonical.scaled(1.0 / c.norm));
        }
    }
    Err(Error::Precondition(
        "every sampled reward is trivial in this environment (there is only one policy up to ordering)".into(),
    ))
}

/// Shaping reward of norm `norm`; zero when `norm` is zero.
fn shaping_of_norm(mdp: &TabularMdp, seed: u64, norm: f64) -> Result<RewardFunction> {
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    if norm == 0.0 {
        return Ok(RewardFunction::zeros(n, na));
    }
    for k in 0..100 {
        let r = shaping_reward(n, na, &random_potential_function(seed.wrapping_add(k), n, 1.0), mdp.discount());
        let len = r.norm();
        if len > 1e-8 {
            return Ok(r.scaled(norm / len));
        }
    }
    Err(Error::Numerical("could not draw a non-zero shaping reward".into()))
}

/// `(εR + RΦ, −εR + RΦ)` with `R` canonical of unit norm and `RΦ` a shaping
/// reward, both of norm `c`. The largest `ε` found by halving and bisection
/// that puts the policies within `δ` of each other.
pub fn perturbation_counterexample(
    mdp: &TabularMdp,
    model: &ModelSpec,
    c: f64,
    delta: f64,
    policy_metric: PolicyMetricSpec,
    seed: u64,
) -> Result<CounterexampleCertificate> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let built = model.build()?;
    if !built.is_continuous() {
        return Err(Error::Precondition(format!(
            "model `{}` is not continuous; use boltzmann or mce",
            built.name()
        )));
    }
    let metric = StarcMetric::new(mdp);
    let unit = unit_canonical(&metric, seed)?;
    let shaping_dir = shaping_of_norm(mdp, seed ^ 0x5a5a_5a5a, 1.0)?;

    let pair = |eps: f64| {
        let phi = shaping_dir.scaled((c * c - eps * eps).max(0.0).sqrt());
        (phi.add_scaled(eps, &unit), phi.add_scaled(-eps, &unit))
    };
    let gap = |eps: f64| -> Result<f64> {
        let (r1, r2) = pair(eps);
        let p1 = built.policy(mdp, &r1)?;
        let p2 = built.policy(mdp, &r2)?;
        policy_metric.distance(mdp, &p1, &p2)
    };

    let mut eps = c;
    let mut lo_gap = gap(eps)?;
    let mut hi = None;
    while lo_gap >= delta {
        hi = Some(eps);
        eps *= 0.5;
        if eps < 1e-300 {
            return Err(Error::Numerical(format!(
                "policy gap stayed at or above delta = {delta:e} down to epsilon = {eps:e}"
            )));
        }
        lo_gap = gap(eps)?;
    }
    if let Some(mut hi) = hi {
        let mut steps = 0;
        while lo_gap < 0.5 * delta && steps < BISECTION_STEPS {
            let mid = 0.5 * (eps + hi);
            let g = gap(mid)?;
            if g < delta {
                eps = mid;
                lo_gap = g;
            } else {
                hi = mid;
            }
            steps += 1;
        }
    }
    if eps <= metric.zero_tol() {
        return Err(Error::Numerical(format!(
            "epsilon = {eps:e} is below the trivial-reward threshold, so the pair would not be distinguishable"
        )));
    }

    let (r1, r2) = pair(eps);
    CounterexampleCertificate::build(
        Scenario::Perturbation,
        built.as_ref(),
        mdp.clone(),
        mdp.clone(),
        r1,
        r2,
        policy_metric,
        CertificateParams {
            delta: Some(delta),
            c: Some(c),
            epsilon: Some(eps),
            eta: DEFAULT_ETA,
            seed: Some(seed),
            ..Default::default()
        },
        format!("antipodal canonical parts of size {eps:e} riding on a shaping reward"),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityWitness {
    #[serde(with = "nested_reward")]
    pub reward_1: RewardFunction,
    #[serde(with = "nested_reward")]
    pub reward_2: RewardFunction,
    pub policy: Policy,
    pub starc_distance: f64,
}

/// Two rewards with the same optimal policy but different orderings. Samples
/// seeded rewards and returns the first pair that lands in the same optimal
/// policy at distance above `1e-3`.
pub fn optimality_nonrobustness_witness(mdp: &TabularMdp, seed: u64) -> Result<OptimalityWitness> {
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    if n == 1 && na == 2 {
        return Err(Error::Precondition(
            "a single state with two actions is the excluded case: every reward either prefers one action, is trivial, or prefers the other".into(),
        ));
    }
    if na == 1 {
        return Err(Error::Precondition("with a single action every reward is trivial".into()));
    }
    let model = OptimalUniform::new(None)?;
    let metric = StarcMetric::new(mdp);
    let mut seen: Vec<(RewardFunction, Policy)> = Vec::new();
    for k in 0..OPTIMALITY_SAMPLES {
        let r = random_reward(seed.wrapping_add(k), n, na, 1.0);
        let pi = model.policy(mdp, &r)?;
        for (other, other_pi) in &seen {
            if other_pi.linf_distance(&pi) < DEFAULT_ETA {
                let d = metric.distance(other, &r)?.distance;
                if d > OPTIMALITY_MIN_DISTANCE {
                    return Ok(OptimalityWitness {
                        reward_1: other.clone(),
                        reward_2: r,
                        policy: pi,
                        starc_distance: d,
                    });
                }
            }
        }
        seen.push((r, pi));
    }
    Err(Error::Numerical(format!(
        "no pair with a shared optimal policy and distance above {OPTIMALITY_MIN_DISTANCE} in {OPTIMALITY_SAMPLES} samples"
    )))
}

pub fn optimality_certificate(mdp: &TabularMdp, seed: u64) -> Result<CounterexampleCertificate> {
    let w = optimality_nonrobustness_witness(mdp, seed)?;
    CounterexampleCertificate::build(
        Scenario::Optimality,
        &OptimalUniform::new(None)?,
        mdp.clone(),
        mdp.clone(),
        w.reward_1,
        w.reward_2,
        PolicyMetricSpec::Linf,
        CertificateParams {
            eta: DEFAULT_ETA,
            seed: Some(seed),
            ..Default::default()
        },
        "distinct rewards sharing one optimal policy".into(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridworldDemo {
    pub certificate: CounterexampleCertificate,
    pub side: usize,
    /// Fraction of states whose greedy action under deterministic dynamics
    /// is `Right` for the first reward.
    pub right_fraction_1: f64,
    /// Same, for `Left` and the second reward.
    pub left_fraction_2: f64,
    /// Largest gap between the two rewards' slippery conditional means.
    pub slip_mean_gap: f64,
}

fn greedy_fraction(mdp: &TabularMdp, reward: &RewardFunction, action: GridAction) -> Result<f64> {
    let (_, q) = optimal_values(mdp, reward)?;
    let target = GridAction::ALL.iter().position(|&a| a == action).expect("listed");
    let hits = (0..mdp.n_states())
        .filter(|&s| {
            let row = q.row(s);
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row[target] >= best - 1e-9 * (1.0 + best.abs())
        })
        .count();
    Ok(hits as f64 / mdp.n_states() as f64)
}

/// `N×N` torus. The first reward pays the horizontal displacement of each
/// move; the second is solved per `(s, a)` to keep the slippery conditional
/// mean and negate the deterministic one. The model sees the slippery world;
/// the rewards are compared in the deterministic one.
pub fn gridworld_demo(n: usize, gamma: f64, model: &ModelSpec) -> Result<GridworldDemo> {
    let (det, slip) = gridworld(n, gamma)?;
    let n_states = n * n;
    let r1 = RewardFunction::from_fn(n_states, 4, |s, _, next| grid_dx(n, s, next));
    let mut r2 = r1.clone();
    let mut slip_mean_gap: f64 = 0.0;
    for s in 0..n_states {
        for a in 0..4 {
            let (p_det, p_slip) = (det.row(s, a), slip.row(s, a));
            let row = r1.row(s, a);
            let det_mean: f64 = p_det.iter().zip(row).map(|(p, r)| p * r).sum();
            let shift = min_norm_two_constraints(p_slip, p_det, 0.0, -2.0 * det_mean)?;
            for (v, d) in r2.row_mut(s, a).iter_mut().zip(&shift) {
                *v += d;
            }
            let mean = |r: &RewardFunction| -> f64 { p_slip.iter().zip(r.row(s, a)).map(|(p, r)| p * r).sum() };
            slip_mean_gap = slip_mean_gap.max((mean(&r1) - mean(&r2)).abs());
        }
    }
    let right_fraction_1 = greedy_fraction(&det, &r1, GridAction::Right)?;
    let left_fraction_2 = greedy_fraction(&det, &r2, GridAction::Left)?;
    let built = model.build()?;
    let certificate = CounterexampleCertificate::build(
        Scenario::Transition,
        built.as_ref(),
        slip,
        det,
        r1,
        r2,
        PolicyMetricSpec::Linf,
        CertificateParams {
            gamma1: Some(gamma),
            tau_ids: Some(("slippery".into(), "deterministic".into())),
            eta: DEFAULT_ETA,
            ..Default::default()
        },
        format!("{n}x{n} torus: movement rewards redistributed to agree under slipping and disagree without it"),
    )?;
    Ok(GridworldDemo {
        certificate,
        side: n,
        right_fraction_1,
        left_fraction_2,
        slip_mean_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    #[serde(with = "nested_reward")]
    pub reward_1: RewardFunction,
    #[serde(with = "nested_reward")]
    pub reward_2: RewardFunction,
    pub starc_distance: f64,
    pub policy_distance: f64,
}

/// Looks for rewards farther apart than `ε` whose policies are within `δ`.
/// Candidates are antipodal pairs `±s·u + RΦ` with `s` log-uniform in
/// `[1e-6, 1]`, alternating with independent random pairs. `None` only means
/// the budget ran out.
pub fn separation_witness_search(
    model: &dyn BehavioralModel,
    mdp: &TabularMdp,
    policy_metric: PolicyMetricSpec,
    epsilon: f64,
    delta: f64,
    seed: u64,
    budget: usize,
) -> Result<Option<SeparationWitness>> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    if epsilon >= 1.0 {
        return Ok(None);
    }
    let metric = StarcMetric::new(mdp);
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..budget {
        let draw = rng.random::<u64>();
        let (r1, r2) = if k % 2 == 0 {
            let u = match unit_canonical(&metric, draw) {
                Ok(u) => u,
                Err(_) => return Ok(None),
            };
            let s = 10f64.powf(-6.0 * rng.random::<f64>());
            let phi = shaping_of_norm(mdp, draw ^ 0xa5a5, rng.random::<f64>())?;
            (phi.add_scaled(s, &u), phi.add_scaled(-s, &u))
        } else {
            (random_reward(draw, n, na, 1.0), random_reward(draw ^ 0xffff, n, na, 1.0))
        };
        let d = metric.distance(&r1, &r2)?.distance;
        if d <= epsilon {
            continue;
        }
        let p1 = model.policy(mdp, &r1)?;
        let p2 = model.policy(mdp, &r2)?;
        let pd = policy_metric.distance(mdp, &p1, &p2)?;
        if pd <= delta {
            return Ok(Some(SeparationWitness {
                reward_1: r1,
                reward_2: r2,
                starc_distance: d,
                policy_distance: pd,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::envs::{differing_row_pair, three_state_chain};
    use crate::mdp::random_mdp;
    use crate::models::{Boltzmann, MaxCausalEntropy};

    const BOLTZMANN: ModelSpec = ModelSpec::Boltzmann { beta: 1.0 };

    fn assert_valid(cert: &CounterexampleCertificate) {
        assert!(cert.holds(), "{cert:#?}");
        let check = cert.verify().unwrap();
        assert!(check.reproducible, "{check:?}");
    }

    #[test]
    fn discount_certificate_on_chain() {
        let chain = three_state_chain(0.9).unwrap();
        let cert = discount_counterexample(&chain, 0.9, 0.95, &BOLTZMANN).unwrap();
        assert_valid(&cert);
        let swapped = discount_counterexample(&chain, 0.95, 0.9, &BOLTZMANN).unwrap();
        assert_valid(&swapped);
        let err = discount_counterexample(&chain, 0.9, 0.9, &BOLTZMANN).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn transition_certificate_on_differing_rows() {
        let (t1, t2) = differing_row_pair(0.9).unwrap();
        let cert = transition_counterexample(&t1, &t2, 0.9, &ModelSpec::Mce { alpha: 1.0 }, ("a", "b")).unwrap();
        assert_valid(&cert);
        assert!(transition_counterexample(&t1, &t1, 0.9, &BOLTZMANN, ("a", "a")).is_err());
    }

    #[test]
    fn certificate_json_round_trip() {
        let chain = three_state_chain(0.9).unwrap();
        let cert = discount_counterexample(&chain, 0.5, 0.9, &BOLTZMANN).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: CounterexampleCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
        assert!(back.verify().unwrap().reproducible);
    }

    #[test]
    fn tampered_certificate_fails_verification() {
        let chain = three_state_chain(0.9).unwrap();
        let mut cert = discount_counterexample(&chain, 0.9, 0.95, &BOLTZMANN).unwrap();
        cert.reward_2 = cert.reward_1.clone();
        let check = cert.verify().unwrap();
        assert!(!check.reproducible);
        assert!(check.starc_distance < 1e-8);
    }

    #[test]
    fn perturbation_certificate() {
        let mdp = random_mdp(3, 4, 2, 1.0).unwrap();
        let cert = perturbation_counterexample(&mdp, &BOLTZMANN, 1.0, 1e-2, PolicyMetricSpec::L2, 7).unwrap();
        assert_valid(&cert);
        assert!((cert.reward_1.norm() - 1.0).abs() < 1e-9);
        assert!((cert.reward_2.norm() - 1.0).abs() < 1e-9);
        assert!(cert.policy_gap >= 0.5e-2 && cert.policy_gap < 1e-2, "{}", cert.policy_gap);
    }

    #[test]
    fn perturbation_needs_continuous_model() {
        let mdp = random_mdp(3, 4, 2, 1.0).unwrap();
        let err = perturbation_counterexample(&mdp, &ModelSpec::OptimalUniform { kappa: None }, 1.0, 0.1, PolicyMetricSpec::L2, 1)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn optimality_witness_examples() {
        let bandit3 = TabularMdp::new(1, 3, vec![1.0; 3], vec![1.0], 0.9).unwrap();
        let a = RewardFunction::new(1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let b = RewardFunction::new(1, 3, vec![1.0, 0.5, 0.0]).unwrap();
        let m = OptimalUniform::new(None).unwrap();
        assert_eq!(m.policy(&bandit3, &a).unwrap(), m.policy(&bandit3, &b).unwrap());
        assert!(StarcMetric::new(&bandit3).distance(&a, &b).unwrap().distance > 0.0);
        assert_valid(&optimality_certificate(&bandit3, 1).unwrap());

        let bandit2 = TabularMdp::new(1, 2, vec![1.0; 2], vec![1.0], 0.9).unwrap();
        let err = optimality_nonrobustness_witness(&bandit2, 1).unwrap_err();
        assert!(err.to_string().contains("excluded case"), "{err}");

        let mdp = random_mdp(5, 3, 2, 1.0).unwrap();
        let w = optimality_nonrobustness_witness(&mdp, 9).unwrap();
        assert!(w.starc_distance > 1e-3);
    }

    #[test]
    fn gridworld_demo_three() {
        let demo = gridworld_demo(3, 0.9, &ModelSpec::Mce { alpha: 1.0 }).unwrap();
        assert_valid(&demo.certificate);
        assert!(demo.certificate.starc_distance >= 0.99);
        assert!(demo.slip_mean_gap < 1e-9);
        assert_eq!(demo.right_fraction_1, 1.0);
        assert_eq!(demo.left_fraction_2, 1.0);
    }

    #[test]
    fn separation_search() {
        let mdp = random_mdp(2, 4, 2, 1.0).unwrap();
        let model = Boltzmann::new(1.0).unwrap();
        let w = separation_witness_search(&model, &mdp, PolicyMetricSpec::L2, 0.9, 0.01, 3, 1000)
            .unwrap()
            .expect("witness");
        assert!(w.starc_distance > 0.9 && w.policy_distance <= 0.01);
        assert!(separation_witness_search(&model, &mdp, PolicyMetricSpec::L2, 0.9, 0.0, 3, 200).unwrap().is_none());
        assert!(separation_witness_search(&model, &mdp, PolicyMetricSpec::L2, 1.5, 1.0, 3, 10).unwrap().is_none());
        let mce = MaxCausalEntropy::new(1.0).unwrap();
        assert!(separation_witness_search(&mce, &mdp, PolicyMetricSpec::L2, 0.9, 0.01, 3, 100).unwrap().is_some());
    }
}
