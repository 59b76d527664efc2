//! The acceptance suite: twelve checks over seeded instances, each with a
//! pass/fail outcome and, where one applies, a wall-clock limit.

use std::fmt;
use std::time::Instant;

use misspec::mdp::envs::{differing_row_pair, three_state_chain};
use misspec::mdp::{random_mdp, random_reward, Policy, RewardFunction, TabularMdp};
use misspec::models::{
    boltzmann_policy, materialize_with, mce_policy, optimal_policy_uniform, BehavioralModel, Boltzmann, MaxCausalEntropy, ModelSpec,
    ModelTable, ModelTableEntry,
};
use misspec::oracle::same_order_oracle;
use misspec::policy_metric::PolicyMetricSpec;
use misspec::robustness::{
    check_epsilon_robust, decompose_transformation, discount_counterexample, gridworld_demo, optimality_nonrobustness_witness,
    perturbation_counterexample, transition_counterexample, two_epsilon_lemma_check, verify_transformation_bound, HypothesisSet,
    DEFAULT_ETA,
};
use misspec::starc::{regret_gap, StarcMetric};
use misspec::transforms::{apply_potential_shaping, apply_redistribution_noise, random_potential_function, random_redistribution, shaping_reward};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_limit_seconds: Option<f64>,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{mark}] criterion {:>2}: {} ({:.2}s", self.id, self.title, self.elapsed_seconds)?;
        if let Some(limit) = self.time_limit_seconds {
            write!(f, ", limit {limit:.0}s")?;
        }
        write!(f, ") {}", self.detail)
    }
}

type Check = misspec::Result<(bool, String)>;

fn criterion(id: u8, title: &'static str, time_limit: Option<f64>, body: impl FnOnce() -> Check) -> CriterionOutcome {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = time_limit {
        if elapsed >= limit {
            passed = false;
            detail.push_str(&format!("; too slow ({elapsed:.1}s)"));
        }
    }
    CriterionOutcome {
        id,
        title,
        passed,
        detail,
        elapsed_seconds: elapsed,
        time_limit_seconds: time_limit,
    }
}

/// Collects failure messages, keeping the first few.
#[derive(Default)]
struct Failures {
    count: usize,
    first: Vec<String>,
}

impl Failures {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.count += 1;
            if self.first.len() < 3 {
                self.first.push(msg());
            }
        }
    }

    fn finish(self, summary: String) -> (bool, String) {
        if self.count == 0 {
            (true, summary)
        } else {
            (false, format!("{summary}; {} failures, e.g. {}", self.count, self.first.join(" | ")))
        }
    }
}

fn dressed(mdp: &TabularMdp, r: &RewardFunction, seed: u64, scale: f64) -> misspec::Result<RewardFunction> {
    let shaped = apply_potential_shaping(r, &random_potential_function(seed, mdp.n_states(), 1.0), mdp.discount())?;
    Ok(&apply_redistribution_noise(&shaped, mdp, seed ^ 0xff, 1.0)? * scale)
}

fn trivial_reward(mdp: &TabularMdp, seed: u64) -> RewardFunction {
    let (n, a) = (mdp.n_states(), mdp.n_actions());
    let shaping = shaping_reward(n, a, &random_potential_function(seed, n, 1.0), mdp.discount());
    &shaping + &random_redistribution(mdp, seed + 1, 1.0)
}

pub fn criterion_1() -> CriterionOutcome {
    criterion(1, "metric axioms on 1000 triples", Some(60.0), || {
        let mut fails = Failures::default();
        for seed in 0..1000u64 {
            let n = 1 + (seed % 8) as usize;
            let a = 1 + (seed / 8 % 3) as usize;
            let mdp = random_mdp(seed, n, a, 0.5 + (seed % 5) as f64 * 0.3)?;
            let metric = StarcMetric::new(&mdp);
            let r1 = random_reward(3 * seed, n, a, 1.0);
            let r2 = match seed % 4 {
                0 => dressed(&mdp, &r1, seed, 2.0)?,
                _ => random_reward(3 * seed + 1, n, a, 1.0),
            };
            let r3 = random_reward(3 * seed + 2, n, a, 1.0);
            let d = |x: &RewardFunction, y: &RewardFunction| metric.distance(x, y).map(|m| m.distance);
            let (d12, d21, d13, d23) = (d(&r1, &r2)?, d(&r2, &r1)?, d(&r1, &r3)?, d(&r2, &r3)?);
            let d11 = d(&r1, &r1)?;
            fails.check(d12 == d21, || format!("seed {seed}: asymmetric {d12} vs {d21}"));
            fails.check(d11 < 1e-12, || format!("seed {seed}: d(R,R) = {d11:e}"));
            fails.check(d13 <= d12 + d23 + 1e-9, || format!("seed {seed}: triangle {d13} > {d12} + {d23}"));
            for v in [d12, d13, d23] {
                fails.check((0.0..=1.0).contains(&v), || format!("seed {seed}: out of range {v}"));
            }
        }
        Ok(fails.finish("1000 triples".into()))
    })
}

pub fn criterion_2() -> CriterionOutcome {
    criterion(2, "landmark distances", None, || {
        let mut fails = Failures::default();
        let mut worst: f64 = 0.0;
        for seed in 0..50u64 {
            let n = 2 + (seed % 5) as usize;
            let a = 2 + (seed % 2) as usize;
            let mdp = random_mdp(seed, n, a, 1.0)?;
            let metric = StarcMetric::new(&mdp);
            let r = random_reward(seed + 100, n, a, 1.0);
            for c in [0.1, 3.0] {
                let d = metric.distance(&r, &(&r * c))?.distance;
                worst = worst.max(d);
                fails.check(d < 1e-8, || format!("seed {seed}: d(R, {c}R) = {d:e}"));
            }
            let canonical = metric.canonicalize(&r)?.canonical;
            let d = metric.distance(&canonical, &-&canonical)?.distance;
            worst = worst.max((d - 1.0).abs());
            fails.check((d - 1.0).abs() <= 1e-8, || format!("seed {seed}: d(R, -R) = {d}"));
            let trivial = trivial_reward(&mdp, seed + 200);
            let d = metric.distance(&r, &trivial)?.distance;
            worst = worst.max((d - 0.5).abs());
            fails.check((d - 0.5).abs() <= 1e-8, || format!("seed {seed}: d(R, trivial) = {d}"));
        }
        Ok(fails.finish(format!("50 instances, worst deviation {worst:.1e}")))
    })
}

pub fn criterion_3() -> CriterionOutcome {
    criterion(3, "zero distance iff same policy order", Some(300.0), || {
        let mut fails = Failures::default();
        let mut equal = 0;
        for seed in 0..200u64 {
            // |A|^|S| ≤ 1024
            let (n, a) = [(2, 2), (3, 2), (4, 2), (5, 2), (2, 3), (3, 3), (5, 4), (10, 2)][(seed % 8) as usize];
            let mdp = random_mdp(seed, n, a, 0.7)?;
            let metric = StarcMetric::new(&mdp);
            let family = seed / 8 % 5;
            let (r1, r2) = match family {
                0 => {
                    let r1 = random_reward(seed + 1000, n, a, 1.0);
                    let r2 = dressed(&mdp, &r1, seed, 0.3 + (seed % 7) as f64)?;
                    (r1, r2)
                }
                1 => (random_reward(seed + 1000, n, a, 1.0), random_reward(seed + 2000, n, a, 1.0)),
                2 => {
                    let r1 = random_reward(seed + 1000, n, a, 1.0);
                    let r2 = dressed(&mdp, &-&r1, seed, 1.0)?;
                    (r1, r2)
                }
                3 => {
                    let d = 0.1 + 0.2 * ((seed % 11) as f64 / 10.0);
                    let (u1, u2) = metric.pair_at_distance(seed, d)?;
                    (dressed(&mdp, &u1, seed, 1.0)?, dressed(&mdp, &u2, seed + 1, 2.0)?)
                }
                _ => (trivial_reward(&mdp, seed), trivial_reward(&mdp, seed + 3000)),
            };
            let close = metric.distance(&r1, &r2)?.distance < 1e-8;
            equal += close as usize;
            let same = same_order_oracle(&mdp, &r1, &r2)?;
            fails.check(close == same, || format!("seed {seed} (family {family}): distance zero {close}, same order {same}"));
        }
        Ok(fails.finish(format!("200 pairs, {equal} at distance zero")))
    })
}

pub fn criterion_4() -> CriterionOutcome {
    criterion(4, "Boltzmann and MCE invariance under shaping and redistribution", None, || {
        let mut fails = Failures::default();
        let mut worst: f64 = 0.0;
        let models: Vec<Box<dyn BehavioralModel>> = [0.5, 1.0, 5.0]
            .iter()
            .flat_map(|&t| [ModelSpec::Boltzmann { beta: t }, ModelSpec::Mce { alpha: t }])
            .map(|s| s.build())
            .collect::<misspec::Result<_>>()?;
        for seed in 0..100u64 {
            let n = 2 + (seed % 5) as usize;
            let a = 2 + (seed % 2) as usize;
            let mdp = random_mdp(seed, n, a, 0.8)?;
            let r = random_reward(seed + 500, n, a, 1.0);
            let shaped = apply_potential_shaping(&r, &random_potential_function(seed, n, 1.0), mdp.discount())?;
            let moved = apply_redistribution_noise(&shaped, &mdp, seed + 7, 1.0)?;
            for model in &models {
                let gap = model.policy(&mdp, &r)?.linf_distance(&model.policy(&mdp, &moved)?);
                worst = worst.max(gap);
                fails.check(gap < 1e-6, || format!("seed {seed} {:?}: gap {gap:e}", model.spec()));
            }
        }
        Ok(fails.finish(format!("100 chains x 6 models, worst gap {worst:.1e}")))
    })
}

pub fn criterion_5() -> CriterionOutcome {
    criterion(5, "temperature and scale identities", None, || {
        let mut fails = Failures::default();
        let mut worst: f64 = 0.0;
        for seed in 0..50u64 {
            let n = 2 + (seed % 5) as usize;
            let a = 2 + (seed % 3) as usize;
            let mdp = random_mdp(seed, n, a, 1.0)?;
            let r = random_reward(seed + 77, n, a, 1.0);
            let (beta, alpha) = (0.5 + (seed % 4) as f64, 0.25 + (seed % 3) as f64);
            for c in [0.5, 2.0, 10.0] {
                let cr = &r * c;
                let gb = boltzmann_policy(&mdp, &r, beta)?.linf_distance(&boltzmann_policy(&mdp, &cr, beta / c)?);
                let gm = mce_policy(&mdp, &r, alpha)?.linf_distance(&mce_policy(&mdp, &cr, c * alpha)?);
                worst = worst.max(gb).max(gm);
                fails.check(gb < 1e-8, || format!("seed {seed} c {c}: Boltzmann gap {gb:e}"));
                fails.check(gm < 1e-8, || format!("seed {seed} c {c}: MCE gap {gm:e}"));
            }
        }
        Ok(fails.finish(format!("50 instances x 3 scales, worst gap {worst:.1e}")))
    })
}

fn certificate_summary(fails: &mut Failures, label: String, gap: f64, distance: f64, gap_ok: bool, distance_ok: bool, reproducible: bool) {
    fails.check(gap_ok, || format!("{label}: policy gap {gap:e}"));
    fails.check(distance_ok, || format!("{label}: distance {distance}"));
    fails.check(reproducible, || format!("{label}: not reproducible"));
}

pub fn criterion_6() -> CriterionOutcome {
    criterion(6, "discount misspecification certificates", Some(10.0), || {
        let mut fails = Failures::default();
        let model = ModelSpec::Boltzmann { beta: 1.0 };
        let mut count = 0;
        for (g1, g2) in [(0.9, 0.95), (0.5, 0.9)] {
            let mut envs = vec![("chain".to_string(), three_state_chain(g1)?)];
            for seed in 0..10u64 {
                envs.push((format!("random {seed}"), random_mdp(seed, 3 + (seed % 3) as usize, 2, 1.0)?));
            }
            for (name, tau) in envs {
                let cert = discount_counterexample(&tau, g1, g2, &model)?;
                let check = cert.verify()?;
                certificate_summary(
                    &mut fails,
                    format!("{name} ({g1}, {g2})"),
                    cert.policy_gap_linf,
                    cert.starc_distance,
                    cert.policy_gap_linf < 1e-6,
                    (cert.starc_distance - 1.0).abs() <= 1e-6,
                    check.reproducible,
                );
                count += 1;
            }
        }
        Ok(fails.finish(format!("{count} certificates")))
    })
}

pub fn criterion_7() -> CriterionOutcome {
    criterion(7, "transition misspecification certificates", Some(10.0), || {
        let mut fails = Failures::default();
        for model in [ModelSpec::Boltzmann { beta: 1.0 }, ModelSpec::Mce { alpha: 1.0 }] {
            let (tau1, tau2) = differing_row_pair(0.9)?;
            let cert = transition_counterexample(&tau1, &tau2, 0.9, &model, ("tau1", "tau2"))?;
            let check = cert.verify()?;
            certificate_summary(
                &mut fails,
                format!("differing rows, {}", model.name()),
                cert.policy_gap_linf,
                cert.starc_distance,
                cert.policy_gap_linf < 1e-6,
                cert.starc_distance >= 0.99,
                check.reproducible,
            );
            let demo = gridworld_demo(3, 0.9, &model)?;
            let check = demo.certificate.verify()?;
            certificate_summary(
                &mut fails,
                format!("gridworld, {}", model.name()),
                demo.certificate.policy_gap_linf,
                demo.certificate.starc_distance,
                demo.certificate.policy_gap_linf < 1e-6,
                demo.certificate.starc_distance >= 0.99,
                check.reproducible,
            );
        }
        Ok(fails.finish("differing rows and 3x3 gridworld, two models".into()))
    })
}

pub fn criterion_8() -> CriterionOutcome {
    criterion(8, "perturbation certificates", Some(30.0), || {
        let mut fails = Failures::default();
        let model = ModelSpec::Boltzmann { beta: 1.0 };
        let mut worst_gap_ratio: f64 = 0.0;
        for delta in [1e-1, 1e-2, 1e-3] {
            for seed in 0..10u64 {
                let mdp = random_mdp(seed, 3 + (seed % 3) as usize, 2 + (seed % 2) as usize, 1.0)?;
                let cert = perturbation_counterexample(&mdp, &model, 1.0, delta, PolicyMetricSpec::L2, seed)?;
                let check = cert.verify()?;
                worst_gap_ratio = worst_gap_ratio.max(cert.policy_gap / delta);
                certificate_summary(
                    &mut fails,
                    format!("seed {seed} delta {delta}"),
                    cert.policy_gap,
                    cert.starc_distance,
                    cert.policy_gap < delta,
                    (cert.starc_distance - 1.0).abs() <= 1e-6,
                    check.reproducible,
                );
            }
        }
        Ok(fails.finish(format!("30 certificates, largest gap/delta {worst_gap_ratio:.3}")))
    })
}

/// Outcome of one decomposition round trip.
#[derive(Debug, Clone, Copy)]
pub struct RoundTrip {
    pub distance: f64,
    pub recomposition_error: f64,
    /// Nudge norm over the canonical norm before the nudge.
    pub nudge_ratio: f64,
    /// `verify_transformation_bound` at `ε = distance + 1e-9`.
    pub holds_at_distance: bool,
    /// `verify_transformation_bound` at `ε = 2·distance + 1e-9`.
    pub holds_at_double: bool,
}

/// Decomposes 100 seeded pairs at distances spread over `[0.05, 0.95]`.
pub fn round_trips() -> misspec::Result<Vec<RoundTrip>> {
    let mut out = Vec::with_capacity(100);
    for seed in 0..100u64 {
        let mdp = random_mdp(seed, 3 + (seed % 3) as usize, 2, 0.8)?;
        let metric = StarcMetric::new(&mdp);
        let target_d = 0.05 + 0.9 * (seed as f64 / 99.0);
        let (u1, u2) = metric.pair_at_distance(seed + 7, target_d)?;
        let r = dressed(&mdp, &u1, seed, 2.0)?;
        let target = dressed(&mdp, &u2, seed + 1000, 0.5)?;
        let distance = metric.distance(&r, &target)?.distance;
        let chain = decompose_transformation(&mdp, &r, &target)?;
        let recomposition_error = chain.apply(&mdp, &r)?.max_abs_diff(&target);
        let at = verify_transformation_bound(&mdp, &chain, std::slice::from_ref(&r), distance + 1e-9)?;
        let doubled = verify_transformation_bound(&mdp, &chain, std::slice::from_ref(&r), 2.0 * distance + 1e-9)?;
        let probe = &at.probes[0];
        out.push(RoundTrip {
            distance,
            recomposition_error,
            nudge_ratio: probe.nudge_norm / probe.canonical_norm_before,
            holds_at_distance: at.holds,
            holds_at_double: doubled.holds,
        });
    }
    Ok(out)
}

pub fn criterion_9() -> CriterionOutcome {
    criterion(9, "decomposition round trip within the nudge bound at the measured distance", None, || {
        let trips = round_trips()?;
        let mut fails = Failures::default();
        for (i, t) in trips.iter().enumerate() {
            fails.check(t.recomposition_error < 1e-8, || format!("pair {i}: recomposition error {:e}", t.recomposition_error));
            fails.check(t.holds_at_distance, || {
                format!(
                    "pair {i}: d {:.3}, nudge ratio {:.4} > bound {:.4}",
                    t.distance,
                    t.nudge_ratio,
                    misspec::robustness::nudge_bound(t.distance + 1e-9)
                )
            });
        }
        let doubled = trips.iter().filter(|t| t.holds_at_double).count();
        Ok(fails.finish(format!("100 pairs; {doubled} satisfy the bound at twice the distance")))
    })
}

fn table(model: ModelSpec, ids: &[&str], policies: Vec<Policy>) -> ModelTable {
    ModelTable {
        model,
        entries: ids
            .iter()
            .zip(policies)
            .map(|(id, policy)| ModelTableEntry {
                id: id.to_string(),
                policy,
            })
            .collect(),
    }
}

pub fn criterion_10() -> CriterionOutcome {
    criterion(10, "robustness checker fidelity", None, || {
        let mut fails = Failures::default();
        let spec = ModelSpec::Boltzmann { beta: 1.0 };

        // four rewards where f and g agree except that g sends R2 and R3,
        // which are opposite, to the same policy f gives R1
        let mdp = random_mdp(2, 3, 2, 0.5)?;
        let metric = StarcMetric::new(&mdp);
        let a = random_reward(3, 3, 2, 1.0);
        let b = -&a;
        let set = HypothesisSet::new(vec![
            ("R1".into(), a.clone()),
            ("R2".into(), &a * 2.0),
            ("R3".into(), b.clone()),
            ("R4".into(), &b * 3.0),
        ])?;
        let (p1, p2, p3) = (
            Policy::uniform(3, 2),
            Policy::deterministic(2, &[0, 0, 0])?,
            Policy::deterministic(2, &[1, 1, 1])?,
        );
        let ids = ["R1", "R2", "R3", "R4"];
        let f = table(spec, &ids, vec![p1.clone(), p2.clone(), p2, p3.clone()]);
        let g = table(spec, &ids, vec![p1.clone(), p1, p3.clone(), p3]);
        let verdict = check_epsilon_robust(&f, &g, &set, &metric, 0.1, DEFAULT_ETA)?;
        fails.check(verdict.conditions() == vec![2], || format!("four-reward construction: conditions {:?}", verdict.conditions()));

        // identical models
        let random_set = HypothesisSet::from_rewards((0..4).map(|k| random_reward(k, 3, 2, 1.0)).collect())?;
        let model = Boltzmann::new(1.0)?;
        let same = materialize_with(&model, &mdp, &random_set)?;
        let verdict = check_epsilon_robust(&same, &same, &random_set, &metric, 0.1, DEFAULT_ETA)?;
        fails.check(verdict.conditions() == vec![4], || format!("f = g: conditions {:?}", verdict.conditions()));

        // every robust verdict below is also checked against the collision lemma
        let mut robust_verdicts = 0;
        let mut lemma = |f: &ModelTable, g: &ModelTable, set: &HypothesisSet, metric: &StarcMetric, eps: f64, label: &str, fails: &mut Failures| -> misspec::Result<()> {
            let verdict = check_epsilon_robust(f, g, set, metric, eps, DEFAULT_ETA)?;
            fails.check(verdict.robust, || format!("{label}: not robust at {eps}: {:?}", verdict.conditions()));
            if verdict.robust {
                robust_verdicts += 1;
                let holds = two_epsilon_lemma_check(f, g, set, metric, eps, DEFAULT_ETA)?;
                fails.check(holds, || format!("{label}: g collisions beyond 2 epsilon"));
            }
            Ok(())
        };

        // g = f composed with a scaled-shaping relabelling
        for seed in 0..5u64 {
            let mdp = random_mdp(seed + 4, 3, 2, 0.5)?;
            let metric = StarcMetric::new(&mdp);
            let gamma = mdp.discount();
            let t = |r: &RewardFunction, s| apply_potential_shaping(&(r * 2.0), &random_potential_function(s, 3, 1.0), gamma);
            let (x, y) = (random_reward(seed + 5, 3, 2, 1.0), random_reward(seed + 6, 3, 2, 1.0));
            let rewards = vec![x.clone(), t(&x, seed + 7)?, y.clone(), t(&y, seed + 8)?];
            let set = HypothesisSet::from_rewards(rewards.clone())?;
            let swapped = HypothesisSet::from_rewards([1, 0, 3, 2].iter().map(|&k| rewards[k].clone()).collect())?;
            for model in [&Boltzmann::new(1.0)? as &dyn BehavioralModel, &MaxCausalEntropy::new(1.0)?] {
                let f = materialize_with(model, &mdp, &set)?;
                let g = materialize_with(model, &mdp, &swapped)?;
                lemma(&f, &g, &set, &metric, 0.0, &format!("shaping relabelling {seed}"), &mut fails)?;
            }
        }

        // g = f composed with a relabelling that moves each reward by at most 0.2
        for seed in 0..5u64 {
            let mdp = random_mdp(seed, 4, 2, 0.6)?;
            let metric = StarcMetric::new(&mdp);
            let (u1, u2) = metric.pair_at_distance(seed, 0.2)?;
            let (v1, v2) = metric.pair_at_distance(seed + 50, 0.1)?;
            let rewards = vec![
                dressed(&mdp, &u1, seed + 1, 1.0)?,
                dressed(&mdp, &u2, seed + 2, 3.0)?,
                dressed(&mdp, &v1, seed + 3, 0.7)?,
                dressed(&mdp, &v2, seed + 4, 1.5)?,
            ];
            let set = HypothesisSet::from_rewards(rewards.clone())?;
            let swapped = HypothesisSet::from_rewards([1, 0, 3, 2].iter().map(|&k| rewards[k].clone()).collect())?;
            for model in [&Boltzmann::new(2.0)? as &dyn BehavioralModel, &MaxCausalEntropy::new(0.5)?] {
                let f = materialize_with(model, &mdp, &set)?;
                let g = materialize_with(model, &mdp, &swapped)?;
                lemma(&f, &g, &set, &metric, 0.2, &format!("bounded relabelling {seed}"), &mut fails)?;
            }
        }
        Ok(fails.finish(format!("lemma checked on {robust_verdicts} robust verdicts")))
    })
}

pub fn criterion_11() -> CriterionOutcome {
    criterion(11, "optimality witness", None, || {
        let mut fails = Failures::default();
        let bandit = TabularMdp::new(1, 3, vec![1.0; 3], vec![1.0], 0.9)?;
        let w = optimality_nonrobustness_witness(&bandit, 0)?;
        let p1 = optimal_policy_uniform(&bandit, &w.reward_1, None)?;
        let p2 = optimal_policy_uniform(&bandit, &w.reward_2, None)?;
        let d = StarcMetric::new(&bandit).distance(&w.reward_1, &w.reward_2)?.distance;
        fails.check(p1.linf_distance(&p2) < DEFAULT_ETA, || format!("optimal policies differ by {:e}", p1.linf_distance(&p2)));
        fails.check(p1.linf_distance(&w.policy) < DEFAULT_ETA, || "stored policy is not optimal".into());
        fails.check(d > 1e-3 && (d - w.starc_distance).abs() < 1e-12, || format!("distance {d} (stored {})", w.starc_distance));

        let excluded = TabularMdp::new(1, 2, vec![1.0; 2], vec![1.0], 0.9)?;
        let err = optimality_nonrobustness_witness(&excluded, 0);
        fails.check(err.is_err(), || "1-state 2-action case did not error".into());
        Ok(fails.finish(format!("1x3 witness at distance {d:.4}; 1x2 rejected")))
    })
}

pub fn criterion_12() -> CriterionOutcome {
    criterion(12, "soundness at zero distance and regret of negation", None, || {
        let mut fails = Failures::default();
        let mut zero_pairs = 0;
        for seed in 0..60u64 {
            let (n, a) = [(2, 2), (3, 2), (4, 2), (3, 3)][(seed % 4) as usize];
            let mdp = random_mdp(seed, n, a, 0.7)?;
            let metric = StarcMetric::new(&mdp);
            let r1 = random_reward(seed + 300, n, a, 1.0);
            let r2 = match seed % 3 {
                0 => dressed(&mdp, &r1, seed, 0.5 + seed as f64 / 10.0)?,
                1 => random_reward(seed + 600, n, a, 1.0),
                _ => &r1 + &trivial_reward(&mdp, seed),
            };
            if metric.distance(&r1, &r2)?.distance < 1e-8 {
                zero_pairs += 1;
                let regret = regret_gap(&mdp, &r1, &r2)?.normalized_regret;
                fails.check(regret < 1e-8, || format!("seed {seed}: regret {regret:e} at distance zero"));
            }
            let neg = regret_gap(&mdp, &r1, &-&r1)?.normalized_regret;
            fails.check((neg - 1.0).abs() <= 1e-8, || format!("seed {seed}: regret of -R is {neg}"));
        }
        Ok(fails.finish(format!("{zero_pairs} zero-distance pairs, 60 negations")))
    })
}

pub const CRITERIA: [fn() -> CriterionOutcome; 12] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
];

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| c()).collect()
}
