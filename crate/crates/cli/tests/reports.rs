//! Report determinism and round trips through the library API.

use misspec::models::ModelSpec;
use misspec::robustness::CounterexampleCertificate;
use misspec_cli::{run_experiment, write_report, EnvSpec, ExperimentConfig, OutputFormat, Report, ReportStatus, RewardSource};

fn starc_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("starc-distance");
    cfg.environment = Some(EnvSpec::Random {
        seed,
        n_states: 5,
        n_actions: 3,
        concentration: 1.0,
        discount: 0.9,
    });
    cfg.rewards = Some(RewardSource::Random { count: 10, seed, scale: 1.0 });
    cfg
}

#[test]
fn reruns_are_identical() {
    let a = run_experiment(&starc_config(8)).unwrap();
    let b = run_experiment(&starc_config(8)).unwrap();
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    assert_ne!(a.deterministic_json(), run_experiment(&starc_config(9)).unwrap().deterministic_json());
}

#[test]
fn csv_has_one_row_per_pair() {
    let report = run_experiment(&starc_config(1)).unwrap();
    let mut buf = Vec::new();
    write_report(&report, OutputFormat::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 46);
    assert_eq!(text.lines().next().unwrap(), "canonical_norm_1,canonical_norm_2,cosine,distance,reward_1,reward_2");
}

#[test]
fn json_round_trip() {
    let report = run_experiment(&starc_config(2)).unwrap();
    let mut buf = Vec::new();
    write_report(&report, OutputFormat::Json, &mut buf).unwrap();
    let back: Report = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, report);
}

#[test]
fn certificate_in_report_reverifies() {
    let mut cfg = ExperimentConfig::new("counterexample-gamma")
        .with_param("gamma1", 0.5)
        .with_param("gamma2", 0.9);
    cfg.models = vec![ModelSpec::Mce { alpha: 0.5 }];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.status, ReportStatus::Complete);
    let text = serde_json::to_string(&report.results["certificate"]).unwrap();
    let cert: CounterexampleCertificate = serde_json::from_str(&text).unwrap();
    assert!(cert.holds());
    let check = cert.verify().unwrap();
    assert!(check.reproducible && check.max_deviation < 1e-8);
}

#[test]
fn every_registered_experiment_runs_on_defaults() {
    let env = EnvSpec::Random {
        seed: 3,
        n_states: 3,
        n_actions: 2,
        concentration: 1.0,
        discount: 0.9,
    };
    let rewards = RewardSource::Random { count: 3, seed: 4, scale: 1.0 };
    for name in misspec_cli::ExperimentRegistry::with_builtins().names() {
        let mut cfg = ExperimentConfig::new(name);
        cfg.environment = Some(env.clone());
        cfg.rewards = Some(rewards.clone());
        cfg.models = vec![ModelSpec::Boltzmann { beta: 1.0 }];
        cfg = match name {
            "robustness-check" => {
                cfg.models.push(ModelSpec::Boltzmann { beta: 2.0 });
                cfg.with_param("epsilon", 0.5)
            }
            "counterexample-gamma" => cfg.with_param("gamma1", 0.5).with_param("gamma2", 0.9),
            "counterexample-tau" => {
                cfg.environment = Some(EnvSpec::DifferingRows { which: 1, discount: 0.9 });
                cfg.eval_environment = Some(EnvSpec::DifferingRows { which: 2, discount: 0.9 });
                cfg
            }
            "counterexample-perturb" => cfg.with_param("delta", 0.1),
            "separation-search" => cfg.with_param("epsilon", 0.5).with_param("delta", 0.1).with_param("budget", 50),
            _ => cfg,
        };
        let report = run_experiment(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(report.status, ReportStatus::Complete, "{name}: {:?}", report.error);
        assert!(!report.rows.is_empty(), "{name}");
    }
}
