use std::fs;
use std::path::{Path, PathBuf};

use misspec::mdp::envs::{differing_row_pair, gridworld, three_state_chain};
use misspec::mdp::{random_mdp, random_reward, RewardFunction, TabularMdp, DEFAULT_DISCOUNT};
use misspec::models::ModelSpec;
use misspec::policy_metric::PolicyMetricSpec;
use misspec::robustness::{HypothesisSet, DEFAULT_ETA};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::RunError;

fn default_discount() -> f64 {
    DEFAULT_DISCOUNT
}

fn default_concentration() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

/// Where an environment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    File {
        path: PathBuf,
    },
    Inline {
        mdp: TabularMdp,
    },
    Random {
        seed: u64,
        n_states: usize,
        n_actions: usize,
        #[serde(default = "default_concentration")]
        concentration: f64,
        #[serde(default = "default_discount")]
        discount: f64,
    },
    ThreeStateChain {
        #[serde(default = "default_discount")]
        discount: f64,
    },
    /// `which` is 1 or 2.
    DifferingRows {
        which: u8,
        #[serde(default = "default_discount")]
        discount: f64,
    },
    Gridworld {
        side: usize,
        #[serde(default)]
        slippery: bool,
        #[serde(default = "default_discount")]
        discount: f64,
    },
}

impl EnvSpec {
    /// Builds the environment; `field` prefixes error paths.
    pub fn load(&self, field: &str) -> Result<TabularMdp, RunError> {
        let mdp = match self {
            EnvSpec::File { path } => read_json(path, &format!("{field}.path"))?,
            EnvSpec::Inline { mdp } => mdp.clone(),
            EnvSpec::Random {
                seed,
                n_states,
                n_actions,
                concentration,
                discount,
            } => random_mdp(*seed, *n_states, *n_actions, *concentration)
                .and_then(|m| m.with_discount(*discount))
                .map_err(|e| RunError::config(field, e.to_string()))?,
            EnvSpec::ThreeStateChain { discount } => {
                three_state_chain(*discount).map_err(|e| RunError::config(format!("{field}.discount"), e.to_string()))?
            }
            EnvSpec::DifferingRows { which, discount } => {
                let (a, b) =
                    differing_row_pair(*discount).map_err(|e| RunError::config(format!("{field}.discount"), e.to_string()))?;
                match which {
                    1 => a,
                    2 => b,
                    other => return Err(RunError::config(format!("{field}.which"), format!("must be 1 or 2, got {other}"))),
                }
            }
            EnvSpec::Gridworld {
                side,
                slippery,
                discount,
            } => {
                let (det, slip) = gridworld(*side, *discount).map_err(|e| RunError::config(field, e.to_string()))?;
                if *slippery {
                    slip
                } else {
                    det
                }
            }
        };
        Ok(mdp)
    }

    fn check_files(&self, field: &str) -> Result<(), RunError> {
        match self {
            EnvSpec::File { path } => file_exists(path, &format!("{field}.path")),
            _ => Ok(()),
        }
    }
}

/// Where the hypothesis rewards come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSource {
    /// A hypothesis-set JSON file.
    File { path: PathBuf },
    /// One bare reward JSON file per entry, with ids taken from the file stems.
    Files { paths: Vec<PathBuf> },
    Inline { set: HypothesisSet },
    Random {
        count: usize,
        seed: u64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

impl RewardSource {
    pub fn load(&self, mdp: &TabularMdp) -> Result<HypothesisSet, RunError> {
        let set = match self {
            RewardSource::File { path } => read_json(path, "rewards.path")?,
            RewardSource::Files { paths } => {
                let mut named = Vec::with_capacity(paths.len());
                for (i, path) in paths.iter().enumerate() {
                    let reward: RewardFunction = read_json(path, &format!("rewards.paths[{i}]"))?;
                    let id = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| format!("r{i}"));
                    named.push((id, reward));
                }
                HypothesisSet::new(named).map_err(|e| RunError::config("rewards.paths", e.to_string()))?
            }
            RewardSource::Inline { set } => set.clone(),
            RewardSource::Random { count, seed, scale } => {
                if *count == 0 {
                    return Err(RunError::config("rewards.count", "must be at least 1"));
                }
                let rewards = (0..*count as u64)
                    .map(|k| random_reward(seed.wrapping_add(k), mdp.n_states(), mdp.n_actions(), *scale))
                    .collect();
                HypothesisSet::from_rewards(rewards).map_err(|e| RunError::config("rewards", e.to_string()))?
            }
        };
        let first = set.reward(0);
        if first.n_states() != mdp.n_states() || first.n_actions() != mdp.n_actions() {
            return Err(RunError::config(
                "rewards",
                format!(
                    "rewards are {}x{} but the environment has {} states and {} actions",
                    first.n_states(),
                    first.n_actions(),
                    mdp.n_states(),
                    mdp.n_actions()
                ),
            ));
        }
        Ok(set)
    }

    fn check_files(&self) -> Result<(), RunError> {
        match self {
            RewardSource::File { path } => file_exists(path, "rewards.path"),
            RewardSource::Files { paths } => paths
                .iter()
                .enumerate()
                .try_for_each(|(i, p)| file_exists(p, &format!("rewards.paths[{i}]"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// ℓ∞ tolerance for policy equality.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Bellman residual at which the solvers stop.
    #[serde(default = "default_tol_dp")]
    pub tol_dp: f64,
    /// Canonical norms at or below this count as zero; defaults per environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_tol_dp() -> f64 {
    misspec::mdp::SolverOptions::default().tol
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eta: default_eta(),
            tol_dp: default_tol_dp(),
            zero_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registered experiment name, e.g. `starc-distance`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvSpec>,
    /// Second environment for experiments that compare two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_environment: Option<EnvSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<RewardSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub metric: PolicyMetricSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
    /// Experiment-specific parameters.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

impl ExperimentConfig {
    pub fn new(kind: &str) -> Self {
        ExperimentConfig {
            kind: kind.to_string(),
            environment: None,
            eval_environment: None,
            rewards: None,
            models: Vec::new(),
            metric: PolicyMetricSpec::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            format: OutputFormat::default(),
            params: Map::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params
            .insert(key.to_string(), serde_json::to_value(value).expect("parameter serializes"));
        self
    }

    /// Parses JSON, reporting the path of the first bad field.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            RunError::config(if path == "." { "config".into() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks tolerances and that referenced files exist. The experiment kind
    /// and parameters are checked when the experiment runs.
    pub fn validate(&self) -> Result<(), RunError> {
        let t = &self.tolerances;
        for (name, v) in [("tolerances.eta", Some(t.eta)), ("tolerances.tol_dp", Some(t.tol_dp)), ("tolerances.zero_tol", t.zero_tol)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(RunError::config(name, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(env) = &self.environment {
            env.check_files("environment")?;
        }
        if let Some(env) = &self.eval_environment {
            env.check_files("eval_environment")?;
        }
        if let Some(rewards) = &self.rewards {
            rewards.check_files()?;
        }
        Ok(())
    }

    /// Deserializes `params` into the experiment's own parameter type.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, RunError> {
        let value = Value::Object(self.params.clone());
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "params".to_string() } else { format!("params.{path}") };
            RunError::config(path, e.into_inner().to_string())
        })
    }
}

fn file_exists(path: &Path, field: &str) -> Result<(), RunError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(RunError::config(field, format!("file `{}` does not exist", path.display())))
    }
}

/// Reads and parses a JSON input file; failures name the config field.
pub fn read_json<T: DeserializeOwned>(path: &Path, field: &str) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::config(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::config(field, format!("{}: {e}", path.display())))
}
