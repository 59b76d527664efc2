//! Potential shaping, S'-redistribution and positive scaling: the reward
//! transformations that leave the policy ordering of an MDP unchanged.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, orthonormalize};
use crate::mdp::{expected_reward, nested_reward, random_potential, RewardFunction, TabularMdp};
use crate::starc::zero_tol;

/// Real-valued potential `Φ` over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFunction {
    pub phi: Vec<f64>,
}

impl PotentialFunction {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("potential entry {i} is not finite")));
        }
        Ok(PotentialFunction { phi })
    }

    pub fn zeros(n_states: usize) -> Self {
        PotentialFunction {
            phi: vec![0.0; n_states],
        }
    }

    pub fn constant(n_states: usize, value: f64) -> Self {
        PotentialFunction {
            phi: vec![value; n_states],
        }
    }

    /// `x` at state `i`, zero elsewhere.
    pub fn indicator(n_states: usize, i: usize, x: f64) -> Self {
        let mut phi = vec![0.0; n_states];
        phi[i] = x;
        PotentialFunction { phi }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// The reward `γΦ(s') − Φ(s)`.
pub fn shaping_reward(n_states: usize, n_actions: usize, potential: &PotentialFunction, gamma: f64) -> RewardFunction {
    let phi = &potential.phi;
    RewardFunction::from_fn(n_states, n_actions, |s, _, next| gamma * phi[next] - phi[s])
}

/// `R(s,a,s') + γΦ(s') − Φ(s)`.
pub fn apply_potential_shaping(reward: &RewardFunction, potential: &PotentialFunction, gamma: f64) -> Result<RewardFunction> {
    if potential.len() != reward.n_states() {
        return Err(Error::Shape(format!(
            "potential has {} entries for {} states",
            potential.len(),
            reward.n_states()
        )));
    }
    Ok(reward + &shaping_reward(reward.n_states(), reward.n_actions(), potential, gamma))
}

/// Orthogonal projection of a flat reward-shaped vector onto the
/// zero-conditional-mean subspace of `mdp`.
pub fn redistribution_component(mdp: &TabularMdp, x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    remove_mean_direction(mdp, &mut out, true);
    out
}

// Per (s, a) block, either keep only the component along τ(s,a,·) or remove it.
fn remove_mean_direction(mdp: &TabularMdp, x: &mut [f64], remove: bool) {
    let n = mdp.n_states();
    for (p, block) in mdp.transition().chunks(n).zip(x.chunks_mut(n)) {
        let c = dot(p, block) / dot(p, p);
        if remove {
            axpy(-c, p, block);
        } else {
            block.iter_mut().zip(p).for_each(|(b, pi)| *b = c * pi);
        }
    }
}

/// Largest `|E_{S'~τ(s,a)}[Δ(s,a,S')]|` over all `(s, a)`.
pub fn max_conditional_mean(mdp: &TabularMdp, delta: &RewardFunction) -> Result<f64> {
    Ok(expected_reward(mdp, delta)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Seeded random element of the redistribution subspace with norm `magnitude`
/// (the zero tensor when the subspace is trivial).
pub fn random_redistribution(mdp: &TabularMdp, seed: u64, magnitude: f64) -> RewardFunction {
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    if n == 1 || magnitude == 0.0 {
        return RewardFunction::zeros(n, na);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut z: Vec<f64> = (0..mdp.reward_len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        remove_mean_direction(mdp, &mut z, true);
        let len = norm(&z);
        if len > 1e-8 {
            z.iter_mut().for_each(|v| *v *= magnitude / len);
            return RewardFunction::new(n, na, z).expect("finite redistribution");
        }
    }
}

/// `R + Δ` for a seeded random redistribution `Δ` with `‖Δ‖₂ = magnitude`.
pub fn apply_redistribution_noise(reward: &RewardFunction, mdp: &TabularMdp, seed: u64, magnitude: f64) -> Result<RewardFunction> {
    mdp.check_reward(reward)?;
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("magnitude must be non-negative, got {magnitude}")));
    }
    Ok(reward + &random_redistribution(mdp, seed, magnitude))
}

/// Explicit bases of the shaping and redistribution subspaces.
#[derive(Debug, Clone)]
pub struct InvarianceBasis {
    pub shaping_dirs: Vec<RewardFunction>,
    pub redistribution_dirs: Vec<RewardFunction>,
    pub combined_orthonormal: Vec<Vec<f64>>,
}

impl InvarianceBasis {
    /// Orthogonal projection of `x` onto the span of both subspaces.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for q in &self.combined_orthonormal {
            axpy(dot(q, x), q, &mut out);
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.combined_orthonormal.len()
    }
}

pub fn invariance_basis(mdp: &TabularMdp) -> InvarianceBasis {
    let (n, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());
    let shaping_dirs: Vec<RewardFunction> = (0..n)
        .map(|i| shaping_reward(n, na, &PotentialFunction::indicator(n, i, 1.0), gamma))
        .collect();

    let mut redistribution_dirs = Vec::with_capacity(n * na * (n - 1));
    for s in 0..n {
        for a in 0..na {
            let p = mdp.row(s, a);
            let pivot = crate::mdp::dp_argmax(p);
            for k in (0..n).filter(|&k| k != pivot) {
                let mut dir = RewardFunction::zeros(n, na);
                let row = dir.row_mut(s, a);
                row[k] = 1.0;
                row[pivot] = -p[k] / p[pivot];
                redistribution_dirs.push(dir);
            }
        }
    }

    let combined_orthonormal = orthonormalize(
        redistribution_dirs
            .iter()
            .chain(&shaping_dirs)
            .map(|r| r.as_slice().to_vec()),
        1e-10,
    );
    InvarianceBasis {
        shaping_dirs,
        redistribution_dirs,
        combined_orthonormal,
    }
}

/// Fast orthogonal projector onto the complement of shaping + redistribution.
///
/// The redistribution subspace is block-diagonal, so its complement is
/// handled one `(s, a)` block at a time. Only the `|S|` shaping directions,
/// with their redistribution parts removed, need an explicit orthonormal basis.
#[derive(Debug, Clone)]
pub struct InvarianceProjector {
    mdp: TabularMdp,
    shaping_q: Vec<Vec<f64>>,
}

/// `R = canonical + shaping(potential) + redistribution`.
#[derive(Debug, Clone)]
pub struct InvarianceDecomposition {
    pub canonical: RewardFunction,
    pub potential: PotentialFunction,
    pub redistribution: RewardFunction,
}

impl InvarianceProjector {
    pub fn new(mdp: &TabularMdp) -> Self {
        let (n, na, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.discount());
        let dirs = (0..n).map(|i| {
            let mut w = shaping_reward(n, na, &PotentialFunction::indicator(n, i, 1.0), gamma).into_vec();
            remove_mean_direction(mdp, &mut w, false);
            w
        });
        InvarianceProjector {
            mdp: mdp.clone(),
            shaping_q: orthonormalize(dirs, 1e-10),
        }
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    /// Dimension of the invariance subspace.
    pub fn rank(&self) -> usize {
        let n = self.mdp.n_states();
        n * self.mdp.n_actions() * (n - 1) + self.shaping_q.len()
    }

    /// Minimum-norm representative of `x` modulo shaping and redistribution.
    pub fn canonical(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        remove_mean_direction(&self.mdp, &mut out, false);
        for q in &self.shaping_q {
            let c = dot(q, &out);
            axpy(-c, q, &mut out);
        }
        out
    }

    /// Norm of the part of `x` outside the invariance subspace.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm(&self.canonical(x))
    }

    /// Splits a reward into its canonical part, a shaping potential and a
    /// redistribution term. The potential is recovered by least squares on
    /// conditional means, where redistribution is invisible.
    pub fn decompose(&self, reward: &RewardFunction) -> Result<InvarianceDecomposition> {
        self.mdp.check_reward(reward)?;
        let (n, na, gamma) = (self.mdp.n_states(), self.mdp.n_actions(), self.mdp.discount());
        let canonical = RewardFunction::new(n, na, self.canonical(reward.as_slice()))?;
        let invariant = reward - &canonical;

        let means = expected_reward(&self.mdp, &invariant)?;
        let m = DMatrix::from_fn(n * na, n, |i, j| {
            let s = i / na;
            gamma * self.mdp.transition()[i * n + j] - if s == j { 1.0 } else { 0.0 }
        });
        // full column rank: a shaping with zero conditional means has zero potential
        let qr = m.qr();
        let rhs = qr.q().transpose() * DVector::from_vec(means);
        let phi = qr
            .r()
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| Error::Numerical("potential fit is singular".into()))?;
        let potential = PotentialFunction::new(phi.as_slice().to_vec())?;
        let redistribution = &invariant - &shaping_reward(n, na, &potential, gamma);
        Ok(InvarianceDecomposition {
            canonical,
            potential,
            redistribution,
        })
    }
}

/// One step of a reward transformation chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformStep {
    Shaping {
        phi: Vec<f64>,
    },
    Redistribution {
        #[serde(with = "nested_reward")]
        delta: RewardFunction,
    },
    Scale {
        c: f64,
    },
    Nudge {
        #[serde(with = "nested_reward")]
        delta: RewardFunction,
    },
}

impl TransformStep {
    pub fn is_nudge(&self) -> bool {
        matches!(self, TransformStep::Nudge { .. })
    }

    /// Checks the step's defining constraint against `mdp`.
    pub fn validate(&self, mdp: &TabularMdp) -> Result<()> {
        match self {
            TransformStep::Shaping { phi } => {
                if phi.len() != mdp.n_states() {
                    return Err(Error::Shape(format!("shaping potential has {} entries for {} states", phi.len(), mdp.n_states())));
                }
                PotentialFunction::new(phi.clone()).map(|_| ())
            }
            TransformStep::Redistribution { delta } => {
                let worst = max_conditional_mean(mdp, delta)?;
                if worst > 1e-9 * 1.0_f64.max(delta.max_abs()) {
                    return Err(Error::InvalidArgument(format!(
                        "redistribution step has conditional mean {worst:e}, expected zero"
                    )));
                }
                Ok(())
            }
            TransformStep::Scale { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidArgument(format!("scale step needs c > 0, got {c}")));
                }
                Ok(())
            }
            TransformStep::Nudge { delta } => mdp.check_reward(delta),
        }
    }

    pub fn apply(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<RewardFunction> {
        self.validate(mdp)?;
        mdp.check_reward(reward)?;
        Ok(match self {
            TransformStep::Shaping { phi } => {
                apply_potential_shaping(reward, &PotentialFunction { phi: phi.clone() }, mdp.discount())?
            }
            TransformStep::Redistribution { delta } | TransformStep::Nudge { delta } => reward + delta,
            TransformStep::Scale { c } => reward * *c,
        })
    }
}

/// Ordered sequence of steps, applied first to last.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransformChain {
    pub steps: Vec<TransformStep>,
}

impl TransformChain {
    pub fn new(steps: Vec<TransformStep>) -> Self {
        TransformChain { steps }
    }

    pub fn nudge_count(&self) -> usize {
        self.steps.iter().filter(|s| s.is_nudge()).count()
    }

    pub fn apply(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<RewardFunction> {
        Ok(self.apply_traced(mdp, reward)?.pop().expect("trace holds the input"))
    }

    /// Reward after every step, starting with the input itself.
    pub fn apply_traced(&self, mdp: &TabularMdp, reward: &RewardFunction) -> Result<Vec<RewardFunction>> {
        let mut trace = vec![reward.clone()];
        for step in &self.steps {
            let next = step.apply(mdp, trace.last().expect("nonempty"))?;
            trace.push(next);
        }
        Ok(trace)
    }
}

/// How two rewards relate under the ordering-preserving transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardRelation {
    Identical,
    ShapingAndRedistribution,
    AlsoPositiveScaling,
    Neither,
}

pub fn differ_by(r1: &RewardFunction, r2: &RewardFunction, mdp: &TabularMdp) -> Result<RewardRelation> {
    differ_by_with(r1, r2, &InvarianceProjector::new(mdp))
}

pub fn differ_by_with(r1: &RewardFunction, r2: &RewardFunction, projector: &InvarianceProjector) -> Result<RewardRelation> {
    let mdp = projector.mdp();
    mdp.check_reward(r1)?;
    mdp.check_reward(r2)?;
    let diff = r1 - r2;
    let gap = diff.norm();
    if gap <= 1e-12 * 1.0_f64.max(r1.norm()) {
        return Ok(RewardRelation::Identical);
    }
    if projector.residual_norm(diff.as_slice()) < 1e-8 * 1.0_f64.max(gap) {
        return Ok(RewardRelation::ShapingAndRedistribution);
    }
    let c1 = projector.canonical(r1.as_slice());
    let c2 = projector.canonical(r2.as_slice());
    let (n1, n2) = (norm(&c1), norm(&c2));
    let tol = zero_tol(mdp);
    if n1 > tol && n2 > tol {
        let unit_gap = c1
            .iter()
            .zip(&c2)
            .map(|(a, b)| (a / n1 - b / n2).powi(2))
            .sum::<f64>()
            .sqrt();
        if unit_gap < 1e-8 {
            return Ok(RewardRelation::AlsoPositiveScaling);
        }
    }
    Ok(RewardRelation::Neither)
}

const INVISIBLE_SEARCH_SEED: u64 = 0x1d15_7ab1e;
const INVISIBLE_SEARCH_ATTEMPTS: u64 = 100;

/// Potential whose `γ1`-shaping reward is non-trivial under `γ2`. Indicator
/// potentials are tried first, then seeded random ones.
pub fn invisible_potential_discount(mdp: &TabularMdp, gamma1: f64, gamma2: f64) -> Result<PotentialFunction> {
    for g in [gamma1, gamma2] {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::InvalidArgument(format!("discount must lie in (0, 1), got {g}")));
        }
    }
    if gamma1 == gamma2 {
        return Err(Error::Precondition(format!("the two discounts must differ (both {gamma1})")));
    }
    if mdp.has_trivial_dynamics() {
        return Err(Error::Precondition(
            "transition function is trivial: no state has actions with different outcomes".into(),
        ));
    }
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let eval = InvarianceProjector::new(&mdp.with_discount(gamma2)?);
    let visible = |phi: &PotentialFunction| {
        let r = shaping_reward(n, na, phi, gamma1);
        eval.residual_norm(r.as_slice()) > 1e-6
    };

    let indicators = (0..n).map(|i| PotentialFunction::indicator(n, i, 1.0));
    let random = (0..INVISIBLE_SEARCH_ATTEMPTS)
        .map(|k| PotentialFunction { phi: random_potential(INVISIBLE_SEARCH_SEED + k, n, 1.0) });
    indicators.chain(random).find(visible).ok_or_else(|| {
        Error::Numerical(format!(
            "no potential gave a non-trivial reward after {n} indicators and {INVISIBLE_SEARCH_ATTEMPTS} random draws"
        ))
    })
}

/// `R† = γ1Φ(s') − Φ(s)`: invisible to any model invariant to shaping with
/// `γ1`, yet non-trivial when evaluated with `γ2`.
pub fn invisible_reward_discount(mdp: &TabularMdp, gamma1: f64, gamma2: f64) -> Result<RewardFunction> {
    let phi = invisible_potential_discount(mdp, gamma1, gamma2)?;
    Ok(shaping_reward(mdp.n_states(), mdp.n_actions(), &phi, gamma1))
}

/// The `(s, a)` whose next-state rows differ most in ℓ1, if any differ by more
/// than `1e-9`.
pub fn differing_row(tau1: &TabularMdp, tau2: &TabularMdp) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for s in 0..tau1.n_states() {
        for a in 0..tau1.n_actions() {
            let (p, q) = (tau1.row(s, a), tau2.row(s, a));
            let max_gap = crate::mdp::max_abs_diff(p, q);
            if max_gap <= 1e-9 {
                continue;
            }
            let l1: f64 = p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum();
            if best.is_none_or(|(_, b)| l1 > b) {
                best = Some(((s, a), l1));
            }
        }
    }
    best.map(|(sa, _)| sa)
}

/// Minimum-norm `r` with `p·r = a` and `q·r = b`.
pub(crate) fn min_norm_two_constraints(p: &[f64], q: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
    let (pp, qq, pq) = (dot(p, p), dot(q, q), dot(p, q));
    let det = pp * qq - pq * pq;
    if !(det > 1e-14 * pp * qq) {
        return Err(Error::Numerical("constraint rows are parallel".into()));
    }
    let lambda = (a * qq - b * pq) / det;
    let mu = (b * pp - a * pq) / det;
    Ok(p.iter().zip(q).map(|(x, y)| lambda * x + mu * y).collect())
}

/// Reward supported on one `(s, a)` where the dynamics differ: its mean is
/// zero under `τ1` at every `(s, a)` and one under `τ2` at the chosen row.
pub fn invisible_reward_transition(tau1: &TabularMdp, tau2: &TabularMdp, gamma: f64) -> Result<RewardFunction> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("discount must lie in (0, 1), got {gamma}")));
    }
    if !tau1.same_shape(tau2) {
        return Err(Error::Shape("the two environments have different state or action sets".into()));
    }
    let (s, a) = differing_row(tau1, tau2)
        .ok_or_else(|| Error::Precondition("the two transition functions are identical".into()))?;
    let row = min_norm_two_constraints(tau1.row(s, a), tau2.row(s, a), 0.0, 1.0)?;
    let mut reward = RewardFunction::zeros(tau1.n_states(), tau1.n_actions());
    reward.row_mut(s, a).copy_from_slice(&row);
    Ok(reward)
}

/// Seeded random potential wrapped as a [`PotentialFunction`].
pub fn random_potential_function(seed: u64, n_states: usize, scale: f64) -> PotentialFunction {
    PotentialFunction {
        phi: random_potential(seed, n_states, scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{envs, policy_return, random_mdp, random_policy, random_reward};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_potential_is_identity() {
        let r = random_reward(1, 3, 2, 1.0);
        assert_eq!(apply_potential_shaping(&r, &PotentialFunction::zeros(3), 0.9).unwrap(), r);
    }

    #[test]
    fn constant_potential_gives_constant_reward() {
        let (gamma, k) = (0.9, 2.5);
        let r = apply_potential_shaping(&RewardFunction::zeros(4, 2), &PotentialFunction::constant(4, -k / (1.0 - gamma)), gamma).unwrap();
        for &v in r.as_slice() {
            assert_abs_diff_eq!(v, k, epsilon = 1e-12);
        }
    }

    #[test]
    fn shaping_shifts_return_by_initial_potential() {
        for seed in 0..10 {
            let mdp = random_mdp(seed, 5, 3, 0.8).unwrap();
            let r = random_reward(seed + 1, 5, 3, 1.0);
            let phi = random_potential_function(seed + 2, 5, 3.0);
            let shaped = apply_potential_shaping(&r, &phi, mdp.discount()).unwrap();
            let shift: f64 = mdp.mu0().iter().zip(&phi.phi).map(|(m, p)| m * p).sum();
            for k in 0..5 {
                let pi = random_policy(seed * 10 + k, 5, 3);
                let lhs = policy_return(&mdp, &shaped, &pi).unwrap();
                let rhs = policy_return(&mdp, &r, &pi).unwrap() - shift;
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn redistribution_noise_keeps_means() {
        let mdp = random_mdp(4, 4, 3, 0.5).unwrap();
        let r = random_reward(5, 4, 3, 1.0);
        assert_eq!(apply_redistribution_noise(&r, &mdp, 1, 0.0).unwrap(), r);
        let noisy = apply_redistribution_noise(&r, &mdp, 1, 2.0).unwrap();
        assert_abs_diff_eq!((&noisy - &r).norm(), 2.0, epsilon = 1e-12);
        assert!(max_conditional_mean(&mdp, &(&noisy - &r)).unwrap() < 1e-9);
        assert!(apply_redistribution_noise(&r, &mdp, 1, -1.0).is_err());
    }

    #[test]
    fn single_state_single_action_basis() {
        let mdp = TabularMdp::new(1, 1, vec![1.0], vec![1.0], 0.7).unwrap();
        let basis = invariance_basis(&mdp);
        assert_eq!(basis.shaping_dirs.len(), 1);
        assert_abs_diff_eq!(basis.shaping_dirs[0].as_slice()[0], 0.7 - 1.0, epsilon = 1e-15);
        assert!(basis.redistribution_dirs.is_empty());
        assert_eq!(basis.rank(), 1);
    }

    #[test]
    fn basis_dimensions_and_constraints() {
        let mdp = random_mdp(11, 3, 2, 0.5).unwrap();
        let basis = invariance_basis(&mdp);
        assert_eq!(basis.redistribution_dirs.len(), 12);
        for dir in &basis.redistribution_dirs {
            assert!(max_conditional_mean(&mdp, dir).unwrap() < 1e-9);
        }
        let gamma = mdp.discount();
        for (i, dir) in basis.shaping_dirs.iter().enumerate() {
            for s in 0..3 {
                for a in 0..2 {
                    for next in 0..3 {
                        let expected = gamma * f64::from(u8::from(next == i)) - f64::from(u8::from(s == i));
                        assert_abs_diff_eq!(dir.get(s, a, next), expected, epsilon = 1e-15);
                    }
                }
            }
        }
        // closure: sums of redistribution directions stay in the subspace
        let sum = &basis.redistribution_dirs[0] + &basis.redistribution_dirs[7];
        assert!(max_conditional_mean(&mdp, &sum).unwrap() < 1e-9);

        let q = &basis.combined_orthonormal;
        assert_eq!(q.len(), 12 + 3);
        for i in 0..q.len() {
            for j in 0..q.len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&q[i], &q[j]) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn structured_projector_matches_explicit_basis() {
        for seed in 0..10 {
            let (n, na) = (2 + seed as usize % 4, 1 + seed as usize % 3);
            let mdp = random_mdp(seed, n, na, 0.3).unwrap();
            let basis = invariance_basis(&mdp);
            let projector = InvarianceProjector::new(&mdp);
            assert_eq!(projector.rank(), basis.rank());
            let r = random_reward(seed + 50, n, na, 1.0);
            let explicit: Vec<f64> = r
                .as_slice()
                .iter()
                .zip(basis.project(r.as_slice()))
                .map(|(x, p)| x - p)
                .collect();
            let fast = projector.canonical(r.as_slice());
            for (a, b) in explicit.iter().zip(&fast) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn decomposition_reassembles() {
        let mdp = random_mdp(8, 4, 3, 0.6).unwrap();
        let r = random_reward(9, 4, 3, 2.0);
        let projector = InvarianceProjector::new(&mdp);
        let parts = projector.decompose(&r).unwrap();
        let rebuilt = &apply_potential_shaping(&parts.canonical, &parts.potential, mdp.discount()).unwrap() + &parts.redistribution;
        assert!(rebuilt.max_abs_diff(&r) < 1e-10);
        assert!(max_conditional_mean(&mdp, &parts.redistribution).unwrap() < 1e-10);

        // a known potential is recovered exactly
        let phi = random_potential_function(10, 4, 1.0);
        let shaped = apply_potential_shaping(&parts.canonical, &phi, mdp.discount()).unwrap();
        let again = projector.decompose(&shaped).unwrap();
        for (a, b) in again.potential.phi.iter().zip(&phi.phi) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn classification_examples() {
        let mdp = random_mdp(21, 4, 2, 0.5).unwrap();
        let projector = InvarianceProjector::new(&mdp);
        let r = random_reward(22, 4, 2, 1.0);
        let canonical = RewardFunction::new(4, 2, projector.canonical(r.as_slice())).unwrap();
        let phi = random_potential_function(23, 4, 1.0);
        let shaped = apply_potential_shaping(&r, &phi, mdp.discount()).unwrap();

        assert_eq!(differ_by(&r, &r, &mdp).unwrap(), RewardRelation::Identical);
        assert_eq!(differ_by(&r, &shaped, &mdp).unwrap(), RewardRelation::ShapingAndRedistribution);
        assert_eq!(differ_by(&canonical, &(&canonical * 2.0), &mdp).unwrap(), RewardRelation::AlsoPositiveScaling);
        assert_eq!(differ_by(&canonical, &(-&canonical), &mdp).unwrap(), RewardRelation::Neither);
        let noisy = apply_redistribution_noise(&shaped, &mdp, 3, 1.5).unwrap();
        assert_eq!(differ_by(&r, &(&noisy * 0.25), &mdp).unwrap(), RewardRelation::AlsoPositiveScaling);
    }

    #[test]
    fn chain_example_discount_reward() {
        let (g1, g2) = (0.9, 0.95);
        let mdp = envs::three_state_chain(g1).unwrap();
        let phi = invisible_potential_discount(&mdp, g1, g2).unwrap();
        assert_eq!(phi, PotentialFunction::indicator(3, 1, 1.0));
        let r = invisible_reward_discount(&mdp, g1, g2).unwrap();
        let x = 1.0;
        for a in 0..2 {
            assert_abs_diff_eq!(r.get(0, a, 1), g1 * x, epsilon = 1e-15);
            assert_abs_diff_eq!(r.get(1, a, 2), -x, epsilon = 1e-15);
            assert_eq!(r.get(0, a, 2), 0.0);
            assert_eq!(r.get(2, a, 2), 0.0);
        }
        let eval = InvarianceProjector::new(&mdp.with_discount(g2).unwrap());
        assert!(eval.residual_norm(r.as_slice()) > 1e-6);
    }

    #[test]
    fn discount_reward_preconditions() {
        let mdp = envs::three_state_chain(0.9).unwrap();
        assert!(matches!(invisible_reward_discount(&mdp, 0.9, 0.9), Err(Error::Precondition(_))));
        let flat = TabularMdp::new(2, 2, vec![0.5; 8], vec![0.5, 0.5], 0.9).unwrap();
        assert!(matches!(invisible_reward_discount(&flat, 0.9, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn differing_row_reward() {
        let (t1, t2) = envs::differing_row_pair(0.9).unwrap();
        let r = invisible_reward_transition(&t1, &t2, 0.9).unwrap();
        let row = r.row(0, 0);
        // any solution works; (1, -1, 3) satisfies the same constraints
        let hand = [1.0, -1.0, 3.0];
        assert_abs_diff_eq!(dot(t1.row(0, 0), &hand), 0.0);
        assert_abs_diff_eq!(dot(t2.row(0, 0), &hand), 1.0);
        assert_abs_diff_eq!(dot(t1.row(0, 0), row), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dot(t2.row(0, 0), row), 1.0, epsilon = 1e-12);
        assert!(norm(row) <= norm(&hand));
        for (got, want) in row.iter().zip([-2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(max_conditional_mean(&t1, &r).unwrap() < 1e-9);
        assert!(matches!(invisible_reward_transition(&t1, &t1, 0.9), Err(Error::Precondition(_))));
    }

    #[test]
    fn chain_json_is_tagged_list() {
        let chain = TransformChain::new(vec![
            TransformStep::Shaping { phi: vec![1.0, 0.0] },
            TransformStep::Scale { c: 2.0 },
        ]);
        let text = serde_json::to_string(&chain).unwrap();
        assert_eq!(text, r#"[{"kind":"shaping","phi":[1.0,0.0]},{"kind":"scale","c":2.0}]"#);
        assert_eq!(serde_json::from_str::<TransformChain>(&text).unwrap(), chain);

        let nudge = TransformChain::new(vec![TransformStep::Nudge { delta: RewardFunction::zeros(2, 1) }]);
        let text = serde_json::to_string(&nudge).unwrap();
        assert_eq!(text, r#"[{"kind":"nudge","delta":[[[0.0,0.0]],[[0.0,0.0]]]}]"#);
        assert_eq!(serde_json::from_str::<TransformChain>(&text).unwrap(), nudge);
    }

    #[test]
    fn chain_rejects_invalid_steps() {
        let mdp = random_mdp(2, 3, 2, 1.0).unwrap();
        let r = random_reward(3, 3, 2, 1.0);
        let bad_scale = TransformChain::new(vec![TransformStep::Scale { c: -1.0 }]);
        assert!(bad_scale.apply(&mdp, &r).is_err());
        let not_redistribution = TransformChain::new(vec![TransformStep::Redistribution { delta: r.clone() }]);
        assert!(not_redistribution.apply(&mdp, &r).is_err());
        let ok = TransformChain::new(vec![
            TransformStep::Redistribution { delta: random_redistribution(&mdp, 4, 1.0) },
            TransformStep::Scale { c: 3.0 },
        ]);
        assert_eq!(ok.apply_traced(&mdp, &r).unwrap().len(), 3);
    }
}
