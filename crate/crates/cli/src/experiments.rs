//! Experiments addressable by name. Each one is a thin pipeline over the
//! library: load inputs from the config, call the library, record results.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use misspec::mdp::{policy_return, SolverOptions, TabularMdp};
use misspec::models::{materialize_with, BehavioralModel, ModelSpec};
use misspec::oracle::{same_order_report, DEFAULT_POLICY_CAP, SAME_ORDER_SEED};
use misspec::robustness::{
    check_epsilon_robust, decompose_transformation, discount_counterexample, gridworld_demo, min_robust_epsilon,
    optimality_certificate, perturbation_counterexample, separation_witness_search, transition_counterexample,
    two_epsilon_lemma_check, verify_transformation_bound, CounterexampleCertificate, HypothesisSet,
};
use misspec::starc::StarcMetric;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{EnvSpec, ExperimentConfig};
use crate::error::RunError;
use crate::report::{Report, ReportStatus, Row, Timings, REPORT_SCHEMA};

/// Results accumulated while an experiment runs; whatever is here when a
/// pipeline error occurs is kept as a partial result.
#[derive(Debug, Default)]
pub struct Output {
    pub results: Map<String, Value>,
    pub rows: Vec<Row>,
}

impl Output {
    pub fn insert(&mut self, key: &str, value: impl Serialize) -> Result<(), RunError> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn push_row(&mut self, row: Value) {
        if let Value::Object(map) = row {
            self.rows.push(map);
        }
    }

    fn is_empty(&self) -> bool {
        self.results.is_empty() && self.rows.is_empty()
    }
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError>;
}

#[derive(Clone, Default)]
pub struct ExperimentRegistry {
    experiments: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl std::fmt::Debug for ExperimentRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.experiments.keys()).finish()
    }
}

impl ExperimentRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = ExperimentRegistry::default();
        reg.register(Arc::new(StarcDistance));
        reg.register(Arc::new(ModelsEval));
        reg.register(Arc::new(RobustnessCheck));
        reg.register(Arc::new(CounterexampleGamma));
        reg.register(Arc::new(CounterexampleTau));
        reg.register(Arc::new(CounterexamplePerturb));
        reg.register(Arc::new(CounterexampleOptimality));
        reg.register(Arc::new(GridworldDemoExperiment));
        reg.register(Arc::new(SameOrder));
        reg.register(Arc::new(SeparationSearch));
        reg.register(Arc::new(Decompose));
        reg
    }

    pub fn register(&mut self, experiment: Arc<dyn Experiment>) {
        self.experiments.insert(experiment.name(), experiment);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.experiments.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Experiment>> {
        self.experiments.get(name).cloned()
    }

    /// Validates the config, runs the experiment and wraps the outcome in a
    /// report. Only configuration problems are returned as errors; pipeline
    /// failures are recorded in the report.
    pub fn run(&self, cfg: &ExperimentConfig) -> Result<Report, RunError> {
        cfg.validate()?;
        let experiment = self.get(&cfg.kind).ok_or_else(|| {
            RunError::config("kind", format!("unknown experiment `{}` (known: {})", cfg.kind, self.names().join(", ")))
        })?;
        let start = Instant::now();
        let mut out = Output::default();
        let outcome = experiment.run(cfg, &mut out);
        let (status, error) = match outcome {
            Ok(()) => (ReportStatus::Complete, None),
            Err(e @ RunError::Config { .. }) => return Err(e),
            Err(e) if e.is_validation() && out.is_empty() => return Err(e),
            Err(e) if out.is_empty() => (ReportStatus::Failed, Some(e.to_string())),
            Err(e) => (ReportStatus::Partial, Some(e.to_string())),
        };
        Ok(Report {
            schema: REPORT_SCHEMA.into(),
            config: cfg.clone(),
            status,
            error,
            results: out.results,
            rows: out.rows,
            timings: Timings {
                total_seconds: start.elapsed().as_secs_f64(),
            },
        })
    }
}

/// Runs `cfg` through the built-in registry.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    ExperimentRegistry::with_builtins().run(cfg)
}

fn environment(cfg: &ExperimentConfig) -> Result<TabularMdp, RunError> {
    cfg.environment
        .as_ref()
        .ok_or_else(|| RunError::config("environment", "this experiment needs an environment"))?
        .load("environment")
}

fn environment_or(cfg: &ExperimentConfig, fallback: EnvSpec) -> Result<TabularMdp, RunError> {
    match &cfg.environment {
        Some(env) => env.load("environment"),
        None => fallback.load("environment"),
    }
}

fn hypotheses(cfg: &ExperimentConfig, mdp: &TabularMdp, at_least: usize) -> Result<HypothesisSet, RunError> {
    let set = cfg
        .rewards
        .as_ref()
        .ok_or_else(|| RunError::config("rewards", "this experiment needs rewards"))?
        .load(mdp)?;
    if set.len() < at_least {
        return Err(RunError::config("rewards", format!("need at least {at_least} rewards, got {}", set.len())));
    }
    Ok(set)
}

fn metric(cfg: &ExperimentConfig, mdp: &TabularMdp) -> StarcMetric {
    match cfg.tolerances.zero_tol {
        Some(t) => StarcMetric::with_zero_tol(mdp, t),
        None => StarcMetric::new(mdp),
    }
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.tolerances.tol_dp,
        ..SolverOptions::default()
    }
}

fn build_model(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<Box<dyn BehavioralModel>, RunError> {
    let mut model = spec.build()?;
    model.set_solver(solver(cfg));
    Ok(model)
}

fn model_spec(cfg: &ExperimentConfig, index: usize, fallback: ModelSpec) -> ModelSpec {
    cfg.models.get(index).copied().unwrap_or(fallback)
}

fn certificate_row(cert: &CounterexampleCertificate) -> Result<Value, RunError> {
    let check = cert.verify()?;
    Ok(json!({
        "scenario": cert.scenario,
        "model": cert.model.name(),
        "policy_metric": cert.policy_metric.name(),
        "policy_gap": cert.policy_gap,
        "policy_gap_linf": cert.policy_gap_linf,
        "starc_distance": cert.starc_distance,
        "holds": cert.holds(),
        "reproducible": check.reproducible,
    }))
}

fn record_certificate(out: &mut Output, cert: &CounterexampleCertificate) -> Result<(), RunError> {
    out.insert("certificate", cert)?;
    out.insert("check", cert.verify()?)?;
    out.push_row(certificate_row(cert)?);
    Ok(())
}

const BOLTZMANN_1: ModelSpec = ModelSpec::Boltzmann { beta: 1.0 };

struct StarcDistance;

impl Experiment for StarcDistance {
    fn name(&self) -> &'static str {
        "starc-distance"
    }

    fn description(&self) -> &'static str {
        "pairwise STARC distances over the rewards"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let mdp = environment(cfg)?;
        let set = hypotheses(cfg, &mdp, 2)?;
        let metric = metric(cfg, &mdp);
        let mut pairs = Vec::new();
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                let m = metric.distance(set.reward(i), set.reward(j))?;
                let row = json!({
                    "reward_1": set.id(i),
                    "reward_2": set.id(j),
                    "distance": m.distance,
                    "cosine": m.cosine,
                    "canonical_norm_1": m.canonical_norm_1,
                    "canonical_norm_2": m.canonical_norm_2,
                });
                pairs.push(row.clone());
                out.push_row(row);
            }
        }
        out.insert("distances", pairs)
    }
}

struct ModelsEval;

impl Experiment for ModelsEval {
    fn name(&self) -> &'static str {
        "models-eval"
    }

    fn description(&self) -> &'static str {
        "policy of every model for every reward"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let mdp = environment(cfg)?;
        let set = hypotheses(cfg, &mdp, 1)?;
        if cfg.models.is_empty() {
            return Err(RunError::config("models", "need at least one model"));
        }
        let mut tables = Vec::new();
        for spec in &cfg.models {
            let model = build_model(cfg, spec)?;
            let table = materialize_with(model.as_ref(), &mdp, &set)?;
            for (i, entry) in table.entries.iter().enumerate() {
                let reward = set.reward(i);
                out.push_row(json!({
                    "model": spec.name(),
                    "reward": entry.id,
                    "policy_return": policy_return(&mdp, reward, &entry.policy)?,
                    "max_probability": entry.policy.as_slice().iter().cloned().fold(0.0, f64::max),
                }));
            }
            tables.push(table);
            out.insert("tables", &tables)?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobustnessParams {
    epsilon: f64,
}

struct RobustnessCheck;

impl Experiment for RobustnessCheck {
    fn name(&self) -> &'static str {
        "robustness-check"
    }

    fn description(&self) -> &'static str {
        "checks whether models[0] is epsilon-robust to misspecification with models[1]"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: RobustnessParams = cfg.params()?;
        let mdp = environment(cfg)?;
        let set = hypotheses(cfg, &mdp, 1)?;
        if cfg.models.len() != 2 {
            return Err(RunError::config("models", "need exactly two models, f then g"));
        }
        let f = materialize_with(build_model(cfg, &cfg.models[0])?.as_ref(), &mdp, &set)?;
        let g = materialize_with(build_model(cfg, &cfg.models[1])?.as_ref(), &mdp, &set)?;
        let metric = metric(cfg, &mdp);
        let eta = cfg.tolerances.eta;
        let verdict = check_epsilon_robust(&f, &g, &set, &metric, p.epsilon, eta)?;
        let tightest = min_robust_epsilon(&f, &g, &set, &metric, eta)?;
        let lemma = if verdict.robust {
            Some(two_epsilon_lemma_check(&f, &g, &set, &metric, p.epsilon, eta)?)
        } else {
            None
        };
        out.insert("verdict", &verdict)?;
        // JSON has no infinity
        out.insert("min_robust_epsilon", tightest.is_finite().then_some(tightest))?;
        out.insert("lemma_holds", lemma)?;
        out.push_row(json!({
            "robust": verdict.robust,
            "epsilon": p.epsilon,
            "eta": eta,
            "violations": verdict.violations.len(),
            "min_robust_epsilon": tightest.is_finite().then_some(tightest),
        }));
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaParams {
    gamma1: f64,
    gamma2: f64,
}

struct CounterexampleGamma;

impl Experiment for CounterexampleGamma {
    fn name(&self) -> &'static str {
        "counterexample-gamma"
    }

    fn description(&self) -> &'static str {
        "certificate that a shaping-invariant model breaks under a misspecified discount"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: GammaParams = cfg.params()?;
        let tau = environment_or(cfg, EnvSpec::ThreeStateChain { discount: p.gamma1 })?;
        let cert = discount_counterexample(&tau, p.gamma1, p.gamma2, &model_spec(cfg, 0, BOLTZMANN_1))?;
        record_certificate(out, &cert)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TauParams {
    #[serde(default = "default_discount")]
    gamma: f64,
}

struct CounterexampleTau;

impl Experiment for CounterexampleTau {
    fn name(&self) -> &'static str {
        "counterexample-tau"
    }

    fn description(&self) -> &'static str {
        "certificate that a redistribution-invariant model breaks under misspecified dynamics"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: TauParams = cfg.params()?;
        let tau1 = environment_or(cfg, EnvSpec::DifferingRows { which: 1, discount: p.gamma })?;
        let tau2 = match &cfg.eval_environment {
            Some(env) => env.load("eval_environment")?,
            None => EnvSpec::DifferingRows { which: 2, discount: p.gamma }.load("eval_environment")?,
        };
        let cert = transition_counterexample(&tau1, &tau2, p.gamma, &model_spec(cfg, 0, BOLTZMANN_1), ("environment", "eval_environment"))?;
        record_certificate(out, &cert)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbParams {
    #[serde(default = "one")]
    c: f64,
    delta: f64,
}

fn default_discount() -> f64 {
    misspec::mdp::DEFAULT_DISCOUNT
}

fn one() -> f64 {
    1.0
}

struct CounterexamplePerturb;

impl Experiment for CounterexamplePerturb {
    fn name(&self) -> &'static str {
        "counterexample-perturb"
    }

    fn description(&self) -> &'static str {
        "opposite rewards whose continuous-model policies are within delta"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: PerturbParams = cfg.params()?;
        let mdp = environment_or(
            cfg,
            EnvSpec::Random {
                seed: cfg.seed,
                n_states: 4,
                n_actions: 2,
                concentration: 1.0,
                discount: misspec::mdp::DEFAULT_DISCOUNT,
            },
        )?;
        let spec = model_spec(cfg, 0, BOLTZMANN_1);
        let cert = perturbation_counterexample(&mdp, &spec, p.c, p.delta, cfg.metric, cfg.seed)?;
        record_certificate(out, &cert)
    }
}

struct CounterexampleOptimality;

impl Experiment for CounterexampleOptimality {
    fn name(&self) -> &'static str {
        "counterexample-optimality"
    }

    fn description(&self) -> &'static str {
        "distinct rewards sharing an optimal policy"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let mdp = environment(cfg)?;
        let cert = optimality_certificate(&mdp, cfg.seed)?;
        record_certificate(out, &cert)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridParams {
    #[serde(default = "three")]
    side: usize,
    #[serde(default = "default_discount")]
    gamma: f64,
}

fn three() -> usize {
    3
}

struct GridworldDemoExperiment;

impl Experiment for GridworldDemoExperiment {
    fn name(&self) -> &'static str {
        "gridworld-demo"
    }

    fn description(&self) -> &'static str {
        "torus gridworld where slipping hides the direction of travel"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: GridParams = cfg.params()?;
        let demo = gridworld_demo(p.side, p.gamma, &model_spec(cfg, 0, ModelSpec::Mce { alpha: 1.0 }))?;
        record_certificate(out, &demo.certificate)?;
        out.insert("right_fraction_1", demo.right_fraction_1)?;
        out.insert("left_fraction_2", demo.left_fraction_2)?;
        out.insert("slip_mean_gap", demo.slip_mean_gap)?;
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SameOrderParams {
    #[serde(default)]
    cap: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

struct SameOrder;

impl Experiment for SameOrder {
    fn name(&self) -> &'static str {
        "same-order"
    }

    fn description(&self) -> &'static str {
        "brute-force check that reward pairs order policies identically"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: SameOrderParams = cfg.params()?;
        let mdp = environment(cfg)?;
        let set = hypotheses(cfg, &mdp, 2)?;
        let metric = metric(cfg, &mdp);
        let mut reports = Vec::new();
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                let report = same_order_report(
                    &mdp,
                    set.reward(i),
                    set.reward(j),
                    p.cap.unwrap_or(DEFAULT_POLICY_CAP),
                    p.seed.unwrap_or(SAME_ORDER_SEED),
                )?;
                let d = metric.distance(set.reward(i), set.reward(j))?.distance;
                out.push_row(json!({
                    "reward_1": set.id(i),
                    "reward_2": set.id(j),
                    "same_order": report.same_order,
                    "starc_distance": d,
                    "deterministic_disagreements": report.deterministic_disagreements,
                    "stochastic_disagreements": report.stochastic_disagreements,
                }));
                reports.push(json!({"reward_1": set.id(i), "reward_2": set.id(j), "report": report}));
                out.insert("pairs", &reports)?;
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeparationParams {
    epsilon: f64,
    delta: f64,
    #[serde(default = "default_budget")]
    budget: usize,
}

fn default_budget() -> usize {
    1000
}

struct SeparationSearch;

impl Experiment for SeparationSearch {
    fn name(&self) -> &'static str {
        "separation-search"
    }

    fn description(&self) -> &'static str {
        "searches for far-apart rewards with nearby policies"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: SeparationParams = cfg.params()?;
        let mdp = environment(cfg)?;
        let model = build_model(cfg, &model_spec(cfg, 0, BOLTZMANN_1))?;
        let witness = separation_witness_search(model.as_ref(), &mdp, cfg.metric, p.epsilon, p.delta, cfg.seed, p.budget)?;
        out.push_row(json!({
            "found": witness.is_some(),
            "starc_distance": witness.as_ref().map(|w| w.starc_distance),
            "policy_distance": witness.as_ref().map(|w| w.policy_distance),
        }));
        out.insert("witness", witness)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecomposeParams {
    #[serde(default)]
    epsilon: Option<f64>,
}

struct Decompose;

impl Experiment for Decompose {
    fn name(&self) -> &'static str {
        "decompose"
    }

    fn description(&self) -> &'static str {
        "transformation chain from the first reward to the second, with its nudge bound"
    }

    fn run(&self, cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
        let p: DecomposeParams = cfg.params()?;
        let mdp = environment(cfg)?;
        let set = hypotheses(cfg, &mdp, 2)?;
        let metric = metric(cfg, &mdp);
        let (r, target) = (set.reward(0), set.reward(1));
        let d = metric.distance(r, target)?.distance;
        let chain = decompose_transformation(&mdp, r, target)?;
        let recomposition_error = chain.apply(&mdp, r)?.max_abs_diff(target);
        let epsilon = match p.epsilon {
            Some(e) => e,
            // smallest budget the chain's nudge fits under
            None => 2.0 * d + 1e-9,
        };
        let report = verify_transformation_bound(&mdp, &chain, std::slice::from_ref(r), epsilon)?;
        out.push_row(json!({
            "reward_1": set.id(0),
            "reward_2": set.id(1),
            "starc_distance": d,
            "recomposition_error": recomposition_error,
            "nudge_norm": report.probes[0].nudge_norm,
            "allowed_nudge": report.probes[0].allowed_nudge,
            "epsilon": epsilon,
            "bound_holds": report.holds,
        }));
        out.insert("chain", &chain)?;
        out.insert("bound", &report)
    }
}
