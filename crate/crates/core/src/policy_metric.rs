//! Distances between policies, selectable by name.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{occupancy_measure, Policy, TabularMdp};

pub trait PolicyMetric: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn distance(&self, mdp: &TabularMdp, a: &Policy, b: &Policy) -> Result<f64>;
}

/// Serializable metric choice: `{"kind":"l2"}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyMetricSpec {
    #[default]
    L2,
    Linf,
    OccupancyL2,
}

impl PolicyMetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyMetricSpec::L2 => L2Metric.name(),
            PolicyMetricSpec::Linf => LinfMetric.name(),
            PolicyMetricSpec::OccupancyL2 => OccupancyL2Metric.name(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "l2" => Ok(PolicyMetricSpec::L2),
            "linf" => Ok(PolicyMetricSpec::Linf),
            "occupancy_l2" => Ok(PolicyMetricSpec::OccupancyL2),
            other => Err(Error::InvalidArgument(format!("unknown policy metric `{other}`"))),
        }
    }

    pub fn distance(&self, mdp: &TabularMdp, a: &Policy, b: &Policy) -> Result<f64> {
        PolicyMetricRegistry::with_builtins().get(self.name())?.distance(mdp, a, b)
    }
}

fn same_shape(mdp: &TabularMdp, a: &Policy, b: &Policy) -> Result<()> {
    mdp.check_policy(a)?;
    mdp.check_policy(b)
}

/// Euclidean distance between probability tables.
#[derive(Debug, Clone, Copy)]
pub struct L2Metric;

impl PolicyMetric for L2Metric {
    fn name(&self) -> &'static str {
        "l2"
    }

    fn distance(&self, mdp: &TabularMdp, a: &Policy, b: &Policy) -> Result<f64> {
        same_shape(mdp, a, b)?;
        Ok(a.l2_distance(b))
    }
}

/// Largest per-entry difference between probability tables.
#[derive(Debug, Clone, Copy)]
pub struct LinfMetric;

impl PolicyMetric for LinfMetric {
    fn name(&self) -> &'static str {
        "linf"
    }

    fn distance(&self, mdp: &TabularMdp, a: &Policy, b: &Policy) -> Result<f64> {
        same_shape(mdp, a, b)?;
        Ok(a.linf_distance(b))
    }
}

/// Euclidean distance between discounted state-action occupancies.
#[derive(Debug, Clone, Copy)]
pub struct OccupancyL2Metric;

impl PolicyMetric for OccupancyL2Metric {
    fn name(&self) -> &'static str {
        "occupancy_l2"
    }

    fn distance(&self, mdp: &TabularMdp, a: &Policy, b: &Policy) -> Result<f64> {
        same_shape(mdp, a, b)?;
        let ma = occupancy_measure(mdp, a)?.state_action();
        let mb = occupancy_measure(mdp, b)?.state_action();
        Ok(ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
    }
}

#[derive(Debug, Clone, Default)]
pub struct PolicyMetricRegistry {
    metrics: BTreeMap<String, Arc<dyn PolicyMetric>>,
}

impl PolicyMetricRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = PolicyMetricRegistry::default();
        reg.register(Arc::new(L2Metric));
        reg.register(Arc::new(LinfMetric));
        reg.register(Arc::new(OccupancyL2Metric));
        reg
    }

    pub fn register(&mut self, metric: Arc<dyn PolicyMetric>) {
        self.metrics.insert(metric.name().to_string(), metric);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn PolicyMetric>> {
        self.metrics.get(name).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown policy metric `{name}` (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.metrics.keys().map(String::as_str).collect()
    }
}
