//! Transformation chains with a single bounded nudge, and the constructive
//! decomposition of one reward into another.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{RewardFunction, TabularMdp};
use crate::robustness::DISTANCE_TOL;
use crate::starc::StarcMetric;
use crate::transforms::{TransformChain, TransformStep};

/// Slack on the nudge-norm comparison.
const NUDGE_SLACK: f64 = 1e-9;

/// `sin(2·arcsin(ε/2))`, the allowed nudge norm per unit of canonical norm.
/// Arguments past 2 are clamped.
pub fn nudge_bound(epsilon: f64) -> f64 {
    (2.0 * (0.5 * epsilon).clamp(0.0, 1.0).asin()).sin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `‖c(R)‖` just before the nudge step (the probe's own norm if there is no nudge).
    pub canonical_norm_before: f64,
    pub nudge_norm: f64,
    /// `canonical_norm_before · nudge_bound(ε)`.
    pub allowed_nudge: f64,
    pub nudge_ok: bool,
    /// STARC distance between the probe and the chain's output.
    pub distance: f64,
    pub distance_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformBoundReport {
    pub holds: bool,
    pub epsilon: f64,
    pub probes: Vec<ProbeReport>,
}

/// Checks that the chain's nudge stays within the trigonometric bound for
/// every probe, and that the chain moves each probe by at most `ε`.
pub fn verify_transformation_bound(
    mdp: &TabularMdp,
    chain: &TransformChain,
    probes: &[RewardFunction],
    epsilon: f64,
) -> Result<TransformBoundReport> {
    if chain.nudge_count() > 1 {
        return Err(Error::InvalidArgument(format!(
            "chain has {} nudge steps; at most one is supported",
            chain.nudge_count()
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let metric = StarcMetric::new(mdp);
    let nudge_at = chain.steps.iter().position(TransformStep::is_nudge);
    let mut reports = Vec::with_capacity(probes.len());
    for probe in probes {
        let trace = chain.apply_traced(mdp, probe)?;
        let (before, nudge_norm) = match nudge_at {
            Some(k) => (&trace[k], (&trace[k + 1] - &trace[k]).norm()),
            None => (probe, 0.0),
        };
        let canonical_norm_before = metric.canonicalize(before)?.norm;
        let allowed_nudge = canonical_norm_before * nudge_bound(epsilon);
        let distance = metric.distance(probe, trace.last().expect("nonempty"))?.distance;
        reports.push(ProbeReport {
            canonical_norm_before,
            nudge_norm,
            allowed_nudge,
            nudge_ok: nudge_norm <= allowed_nudge + NUDGE_SLACK,
            distance,
            distance_ok: distance <= epsilon + DISTANCE_TOL,
        });
    }
    Ok(TransformBoundReport {
        holds: reports.iter().all(|r| r.nudge_ok && r.distance_ok),
        epsilon,
        probes: reports,
    })
}

/// Chain taking `reward` to `target`: strip the invariant part, normalize,
/// stretch so the nudge closes a right triangle, nudge, rescale, and restore
/// the target's invariant part.
pub fn decompose_transformation(mdp: &TabularMdp, reward: &RewardFunction, target: &RewardFunction) -> Result<TransformChain> {
    mdp.check_reward(reward)?;
    mdp.check_reward(target)?;
    let metric = StarcMetric::new(mdp);
    let from = metric.projector().decompose(reward)?;
    let to = metric.projector().decompose(target)?;
    let (n1, n2) = (from.canonical.norm(), to.canonical.norm());
    let (zero1, zero2) = (n1 <= metric.zero_tol(), n2 <= metric.zero_tol());

    let strip = [
        TransformStep::Shaping {
            phi: from.potential.phi.iter().map(|p| -p).collect(),
        },
        TransformStep::Redistribution {
            delta: -&from.redistribution,
        },
    ];
    let restore = [
        TransformStep::Shaping { phi: to.potential.phi },
        TransformStep::Redistribution { delta: to.redistribution },
    ];

    let middle = match (zero1, zero2) {
        (true, true) => vec![TransformStep::Nudge {
            delta: &to.canonical - &from.canonical,
        }],
        (false, true) => {
            return Err(Error::InvalidArgument(
                "target reward is trivial: its canonical norm is zero, so it standardizes to the zero reward and cannot be reached by normalizing".into(),
            ))
        }
        (true, false) => {
            return Err(Error::InvalidArgument(
                "source reward is trivial: its canonical norm is zero, so it standardizes to the zero reward and cannot be normalized".into(),
            ))
        }
        (false, false) => {
            let u1 = from.canonical.scaled(1.0 / n1);
            let u2 = to.canonical.scaled(1.0 / n2);
            let cos = u1.dot(&u2);
            // obtuse pairs have no right triangle; nudge straight across
            let k = if cos > 1e-12 { 1.0 / cos } else { 1.0 };
            vec![
                TransformStep::Scale { c: 1.0 / n1 },
                TransformStep::Scale { c: k },
                TransformStep::Nudge {
                    delta: u2.add_scaled(-k, &u1),
                },
                TransformStep::Scale { c: n2 },
            ]
        }
    };
    Ok(TransformChain::new(strip.into_iter().chain(middle).chain(restore).collect()))
}
