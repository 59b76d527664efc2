use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use misspec::models::ModelSpec;
use misspec::policy_metric::PolicyMetricSpec;
use misspec_cli::acceptance;
use misspec_cli::{emit_report, run_experiment, EnvSpec, ExperimentConfig, OutputFormat, ReportStatus, RewardSource, RunError};

#[derive(Parser)]
#[command(name = "misspec", version, about = "Reward-metric and misspecification-robustness experiments on tabular MDPs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// ℓ∞ tolerance for policy equality.
    #[arg(long, global = true)]
    tol_policy: Option<f64>,
    /// Bellman residual at which the solvers stop.
    #[arg(long, global = true)]
    tol_dp: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise STARC distances.
    Starc {
        #[arg(long)]
        env: PathBuf,
        /// Reward files; ids are the file stems.
        #[arg(long, num_args = 1.., required = true)]
        rewards: Vec<PathBuf>,
    },
    Models {
        #[command(subcommand)]
        command: ModelsCommand,
    },
    Robustness {
        #[command(subcommand)]
        command: RobustnessCommand,
    },
    Counterexample {
        #[command(subcommand)]
        command: CounterexampleCommand,
    },
    /// Slippery torus gridworld demonstration.
    GridworldDemo {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long)]
        model: Option<String>,
    },
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    Suite {
        #[command(subcommand)]
        command: SuiteCommand,
    },
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// List registered experiments.
    List,
}

#[derive(Subcommand)]
enum ModelsCommand {
    /// Policy of a model for each reward in a hypothesis set.
    Eval {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        hypotheses: PathBuf,
        /// Model spec as JSON, e.g. '{"kind":"boltzmann","beta":1}'.
        #[arg(long)]
        model: String,
    },
}

#[derive(Subcommand)]
enum RobustnessCommand {
    /// Is model f epsilon-robust to misspecification with model g?
    Check {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        hypotheses: PathBuf,
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        epsilon: f64,
    },
}

#[derive(Subcommand)]
enum CounterexampleCommand {
    Gamma {
        /// Environment file; defaults to the three-state chain.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        gamma1: f64,
        #[arg(long)]
        gamma2: f64,
        #[arg(long)]
        model: Option<String>,
    },
    Tau {
        /// Model environment; defaults to the first differing-row example.
        #[arg(long)]
        env1: Option<PathBuf>,
        /// Evaluation environment; defaults to the second differing-row example.
        #[arg(long)]
        env2: Option<PathBuf>,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long)]
        model: Option<String>,
    },
    Perturb {
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        model: Option<String>,
        /// l2, linf or occupancy_l2.
        #[arg(long)]
        metric: Option<String>,
    },
    Optimality {
        #[arg(long)]
        env: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Brute-force policy-order comparison of two rewards.
    SameOrder {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        r1: PathBuf,
        #[arg(long)]
        r2: PathBuf,
    },
}

#[derive(Subcommand)]
enum SuiteCommand {
    /// Run the twelve acceptance checks.
    Acceptance,
}

fn parse_model(text: &str) -> Result<ModelSpec, RunError> {
    serde_json::from_str(text).map_err(|e| RunError::config("models", format!("`{text}`: {e}")))
}

fn file_env(path: PathBuf) -> EnvSpec {
    EnvSpec::File { path }
}

fn build_config(command: Command) -> Result<Option<ExperimentConfig>, RunError> {
    let cfg = match command {
        Command::Starc { env, rewards } => {
            let mut cfg = ExperimentConfig::new("starc-distance");
            cfg.environment = Some(file_env(env));
            cfg.rewards = Some(RewardSource::Files { paths: rewards });
            cfg
        }
        Command::Models {
            command: ModelsCommand::Eval { env, hypotheses, model },
        } => {
            let mut cfg = ExperimentConfig::new("models-eval");
            cfg.environment = Some(file_env(env));
            cfg.rewards = Some(RewardSource::File { path: hypotheses });
            cfg.models = vec![parse_model(&model)?];
            cfg
        }
        Command::Robustness {
            command: RobustnessCommand::Check { env, hypotheses, f, g, epsilon },
        } => {
            let mut cfg = ExperimentConfig::new("robustness-check").with_param("epsilon", epsilon);
            cfg.environment = Some(file_env(env));
            cfg.rewards = Some(RewardSource::File { path: hypotheses });
            cfg.models = vec![parse_model(&f)?, parse_model(&g)?];
            cfg
        }
        Command::Counterexample { command } => match command {
            CounterexampleCommand::Gamma { env, gamma1, gamma2, model } => {
                let mut cfg = ExperimentConfig::new("counterexample-gamma")
                    .with_param("gamma1", gamma1)
                    .with_param("gamma2", gamma2);
                cfg.environment = env.map(file_env);
                cfg.models = model.as_deref().map(parse_model).transpose()?.into_iter().collect();
                cfg
            }
            CounterexampleCommand::Tau { env1, env2, gamma, model } => {
                let mut cfg = ExperimentConfig::new("counterexample-tau").with_param("gamma", gamma);
                cfg.environment = env1.map(file_env);
                cfg.eval_environment = env2.map(file_env);
                cfg.models = model.as_deref().map(parse_model).transpose()?.into_iter().collect();
                cfg
            }
            CounterexampleCommand::Perturb { env, c, delta, model, metric } => {
                let mut cfg = ExperimentConfig::new("counterexample-perturb")
                    .with_param("c", c)
                    .with_param("delta", delta);
                cfg.environment = env.map(file_env);
                cfg.models = model.as_deref().map(parse_model).transpose()?.into_iter().collect();
                if let Some(m) = metric {
                    cfg.metric = PolicyMetricSpec::from_name(&m).map_err(|e| RunError::config("metric", e.to_string()))?;
                }
                cfg
            }
            CounterexampleCommand::Optimality { env } => {
                let mut cfg = ExperimentConfig::new("counterexample-optimality");
                cfg.environment = Some(file_env(env));
                cfg
            }
        },
        Command::GridworldDemo { n, gamma, model } => {
            let mut cfg = ExperimentConfig::new("gridworld-demo")
                .with_param("side", n)
                .with_param("gamma", gamma);
            cfg.models = model.as_deref().map(parse_model).transpose()?.into_iter().collect();
            cfg
        }
        Command::Oracle {
            command: OracleCommand::SameOrder { env, r1, r2 },
        } => {
            let mut cfg = ExperimentConfig::new("same-order");
            cfg.environment = Some(file_env(env));
            cfg.rewards = Some(RewardSource::Files { paths: vec![r1, r2] });
            cfg
        }
        Command::Run { config } => ExperimentConfig::from_file(&config)?,
        Command::Suite { .. } | Command::List => return Ok(None),
    };
    Ok(Some(cfg))
}

fn apply_globals(cfg: &mut ExperimentConfig, g: &Global) {
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(format) = g.format {
        cfg.format = format;
    }
    if let Some(eta) = g.tol_policy {
        cfg.tolerances.eta = eta;
    }
    if let Some(tol) = g.tol_dp {
        cfg.tolerances.tol_dp = tol;
    }
}

fn run_suite() -> ExitCode {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Suite {
            command: SuiteCommand::Acceptance,
        } => return run_suite(),
        Command::List => {
            let registry = misspec_cli::ExperimentRegistry::with_builtins();
            for name in registry.names() {
                let e = registry.get(name).expect("listed");
                println!("{name:<28}{}", e.description());
            }
            return ExitCode::SUCCESS;
        }
        _ => {}
    }
    let Cli { global, command } = cli;
    let mut cfg = match build_config(command) {
        Ok(Some(cfg)) => cfg,
        Ok(None) => unreachable!("handled above"),
        Err(e) => return fail(&e),
    };
    apply_globals(&mut cfg, &global);
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if let Err(e) = emit_report(&report, cfg.format, global.out.as_deref()) {
        return fail(&e);
    }
    match report.status {
        ReportStatus::Complete => ExitCode::SUCCESS,
        _ => {
            eprintln!("error: {}", report.error.as_deref().unwrap_or("experiment failed"));
            ExitCode::from(2)
        }
    }
}
