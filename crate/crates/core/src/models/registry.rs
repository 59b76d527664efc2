use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::Value;

use super::{BehavioralModel, Boltzmann, MaxCausalEntropy, ModelSpec, OptimalUniform};
use crate::error::{Error, Result};

/// Builds a model from its JSON parameters (the whole spec object, including `kind`).
pub type ModelConstructor = Arc<dyn Fn(&Value) -> Result<Box<dyn BehavioralModel>> + Send + Sync>;

/// Models addressable by name at runtime.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    constructors: BTreeMap<String, ModelConstructor>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelRegistry").field("names", &self.names()).finish()
    }
}

fn typed(value: &Value) -> Result<ModelSpec> {
    Ok(serde_json::from_value(value.clone())?)
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = ModelRegistry::empty();
        reg.register(OptimalUniform::NAME, |v| match typed(v)? {
            ModelSpec::OptimalUniform { kappa } => Ok(Box::new(OptimalUniform::new(kappa)?)),
            _ => unreachable!("kind already matched"),
        });
        reg.register(Boltzmann::NAME, |v| match typed(v)? {
            ModelSpec::Boltzmann { beta } => Ok(Box::new(Boltzmann::new(beta)?)),
            _ => unreachable!("kind already matched"),
        });
        reg.register(MaxCausalEntropy::NAME, |v| match typed(v)? {
            ModelSpec::Mce { alpha } => Ok(Box::new(MaxCausalEntropy::new(alpha)?)),
            _ => unreachable!("kind already matched"),
        });
        reg
    }

    /// Adds or replaces the constructor for `name`.
    pub fn register<F>(&mut self, name: &str, ctor: F)
    where
        F: Fn(&Value) -> Result<Box<dyn BehavioralModel>> + Send + Sync + 'static,
    {
        self.constructors.insert(name.to_string(), Arc::new(ctor));
    }

    pub fn names(&self) -> Vec<&str> {
        self.constructors.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.constructors.contains_key(name)
    }

    /// Builds from a JSON object such as `{"kind":"boltzmann","beta":1.0}`.
    pub fn build(&self, spec: &Value) -> Result<Box<dyn BehavioralModel>> {
        let kind = spec
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidArgument("model spec needs a string `kind` field".into()))?;
        let ctor = self.constructors.get(kind).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown model `{kind}` (known: {})", self.names().join(", ")))
        })?;
        ctor(spec)
    }

    pub fn build_spec(&self, spec: &ModelSpec) -> Result<Box<dyn BehavioralModel>> {
        self.build(&serde_json::to_value(spec)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Policy, RewardFunction, TabularMdp};
    use serde_json::json;

    #[derive(Debug)]
    struct AlwaysFirst;

    impl BehavioralModel for AlwaysFirst {
        fn name(&self) -> &'static str {
            "always_first"
        }

        fn spec(&self) -> ModelSpec {
            ModelSpec::OptimalUniform { kappa: None }
        }

        fn policy(&self, mdp: &TabularMdp, _: &RewardFunction) -> Result<Policy> {
            Policy::deterministic(mdp.n_actions(), &vec![0; mdp.n_states()])
        }
    }

    #[test]
    fn builtins_by_name() {
        let reg = ModelRegistry::with_builtins();
        assert_eq!(reg.names(), vec!["boltzmann", "mce", "optimal_uniform"]);
        let m = reg.build(&json!({"kind": "mce", "alpha": 2.0})).unwrap();
        assert_eq!(m.name(), "mce");
        assert_eq!(m.spec(), ModelSpec::Mce { alpha: 2.0 });
        assert!(m.is_continuous());
    }

    #[test]
    fn unknown_and_malformed_specs() {
        let reg = ModelRegistry::with_builtins();
        let err = reg.build(&json!({"kind": "greedy"})).unwrap_err();
        assert!(err.to_string().contains("unknown model `greedy`"), "{err}");
        assert!(reg.build(&json!({"beta": 1.0})).is_err());
        assert!(reg.build(&json!({"kind": "boltzmann"})).is_err());
        assert!(reg.build(&json!({"kind": "boltzmann", "beta": 1.0, "extra": 3})).is_err());
    }

    #[test]
    fn custom_model_can_be_registered() {
        let mut reg = ModelRegistry::with_builtins();
        reg.register("always_first", |_| Ok(Box::new(AlwaysFirst)));
        let m = reg.build(&json!({"kind": "always_first"})).unwrap();
        let mdp = TabularMdp::new(1, 2, vec![1.0, 1.0], vec![1.0], 0.9).unwrap();
        let pi = m.policy(&mdp, &RewardFunction::zeros(1, 2)).unwrap();
        assert_eq!(pi.row(0), &[1.0, 0.0]);
    }
}
