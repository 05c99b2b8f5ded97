//! Experiment orchestration: config ingestion, seeded parallel trials,
//! regret aggregation, instance statistics and file output.

mod config;
mod output;
mod stats;
mod trace;

use rayon::prelude::*;
use thiserror::Error;

use crate::algorithms::{ActionKind, Agent, AgentError, ArmSet, EpsilonGreedy, InitMode, LinUcb};
use crate::env::{BanditEnv, ContextualEnv, EnvError, Environment, NoiseModel};
use crate::linalg::{LinalgError, RewardInstance};
use crate::regions::{
    ContextualInstance, RegionError, RegionPoint, RejectionSampler, RobustRegion,
};
use crate::rng::trial_seed;

pub use config::{
    AlgorithmSpec, ContextualSpec, ExperimentConfig, FeatureFile, FeaturesSource, InstanceSpec,
    Problem, SampleSpec,
};
pub use output::{emit_outputs, format_stats, read_regret_csv, regret_csv, regret_svg, MAX_LOGGED_ROWS};
pub use stats::{compute_stats, InstanceStats};
pub use trace::{growth_exponent, RegretTrace};

/// Candidate points kept for `region_points.csv`.
const REGION_POINT_CAP: usize = 20_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("instance is not robust: {0}")]
    NotRobust(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<LinalgError> for HarnessError {
    fn from(e: LinalgError) -> Self {
        HarnessError::Region(RegionError::Linalg(e))
    }
}

/// Per-trial counters beyond the regret curve.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct TrialSummary {
    pub suboptimal_plays: u64,
    pub forced_rounds: u64,
    pub explore_rounds: u64,
    /// Regret accumulated on rounds where the agent exploited its estimate.
    pub exploit_regret: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub mu: RewardInstance,
    pub trace: RegretTrace,
    pub stats: InstanceStats,
    pub trials: Vec<TrialSummary>,
    /// Sampler candidates when the instance was drawn from a region.
    pub region_points: Option<Vec<RegionPoint>>,
}

/// Reward vector named by the config, sampled if requested.
pub fn resolve_instance(
    config: &ExperimentConfig,
    problem: &Problem,
) -> Result<(RewardInstance, Option<Vec<RegionPoint>>), HarnessError> {
    match &config.instance {
        InstanceSpec::Mu(values) => {
            if values.len() != problem.layout.total() {
                return Err(HarnessError::Config(format!(
                    "instance has {} rewards, features have {} rows",
                    values.len(),
                    problem.layout.total()
                )));
            }
            Ok((RewardInstance::new(values.clone())?, None))
        }
        InstanceSpec::Sample(spec) => {
            if spec.arms.len() != problem.layout.num_contexts {
                return Err(HarnessError::Config(format!(
                    "{} sample arms for {} contexts",
                    spec.arms.len(),
                    problem.layout.num_contexts
                )));
            }
            let targets: Vec<usize> = spec.arms.iter().map(|a| a - 1).collect();
            let region = match config.membership_ridge {
                Some(lambda) if problem.layout.num_contexts == 1 => {
                    RobustRegion::ridge(&problem.features, targets[0], lambda)?
                }
                _ => RobustRegion::new(&problem.features, problem.layout, &targets)?,
            };
            let mut sampler =
                RejectionSampler::new(&region, spec.bounds[0], spec.bounds[1], spec.seed)?
                    .record_points(REGION_POINT_CAP);
            let mu = sampler.next_instance()?;
            Ok((mu, Some(sampler.points().to_vec())))
        }
    }
}

fn build_agent(
    config: &ExperimentConfig,
    arms: ArmSet,
    seed: u64,
) -> Result<Box<dyn Agent>, HarnessError> {
    Ok(match &config.algorithm {
        AlgorithmSpec::EpsGreedy(c) => Box::new(EpsilonGreedy::new(arms, *c, seed)?),
        AlgorithmSpec::Linucb(c) => Box::new(LinUcb::new(arms, *c, seed)?),
    })
}

fn run_trial(
    config: &ExperimentConfig,
    problem: &Problem,
    mu: &RewardInstance,
    trial: usize,
) -> Result<(Vec<f64>, TrialSummary), HarnessError> {
    let seed = trial_seed(config.base_seed, trial);
    let noise = NoiseModel::new(config.noise_sigma)?;
    let mut env: Box<dyn Environment + Send> = if problem.layout.num_contexts == 1 {
        Box::new(BanditEnv::new(mu.clone(), noise, seed))
    } else {
        let instance = ContextualInstance::new(
            problem.features.clone(),
            problem.layout,
            mu.clone(),
            problem.context_probs.clone(),
        )?;
        Box::new(ContextualEnv::new(instance, noise, seed)?)
    };
    let arms = ArmSet::new(problem.features.clone(), problem.layout)?;
    let mut agent = build_agent(config, arms, seed)?;

    let mut cumulative = Vec::with_capacity(config.horizon);
    let mut summary = TrialSummary::default();
    let mut total = 0.0;
    for _ in 0..config.horizon {
        let x = env.next_context();
        let action = agent.select(x)?;
        let reward = env.pull(x, action.arm)?;
        agent.observe(x, action.arm, reward);
        let regret = env.instant_regret(x, action.arm);
        total += regret;
        cumulative.push(total);
        if action.arm != env.optimal_arm(x) {
            summary.suboptimal_plays += 1;
        }
        match action.kind {
            ActionKind::Forced => summary.forced_rounds += 1,
            ActionKind::Explore => summary.explore_rounds += 1,
            ActionKind::Greedy | ActionKind::Optimistic => summary.exploit_regret += regret,
        }
    }
    Ok((cumulative, summary))
}

/// Runs `config.trials` independent trials, trial `i` seeded with
/// `base_seed + i`, on at most `jobs` threads (all cores when `None`).
/// Results do not depend on `jobs`.
pub fn run_experiment(
    config: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let problem = config.problem()?;
    let (mu, region_points) = resolve_instance(config, &problem)?;
    let stats = compute_stats(&problem.features, &mu, problem.layout, config.membership_ridge)?;
    if !stats.member && !config.allow_nonrobust {
        return Err(HarnessError::NotRobust(
            "instance lies outside its robust observation region (set allow_nonrobust to run anyway)"
                .into(),
        ));
    }
    if let AlgorithmSpec::Linucb(c) = &config.algorithm {
        let l = problem.features.max_row_norm();
        if c.init == InitMode::ForcedBasis && l > 1.0 {
            log::warn!(
                "feature norms reach {l} > 1; LinUCB uses ridge initialization with λ = {}",
                l * l
            );
        }
    }
    if stats.boundary_warning {
        log::warn!("instance lies within roundoff of its region boundary");
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let results: Vec<(Vec<f64>, TrialSummary)> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, &problem, &mu, i))
            .collect::<Result<_, _>>()
    })?;
    let (curves, trials): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(ExperimentOutcome {
        mu,
        trace: RegretTrace::from_trials(curves)?,
        stats,
        trials,
        region_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text, None).unwrap()
    }

    #[test]
    fn single_round_single_trial() {
        let cfg = config(
            r#"{"features": [[3],[1]], "instance": {"mu": [20, 3]}, "algorithm": {"eps_greedy": {}},
                "horizon": 1, "trials": 1}"#,
        );
        let out = run_experiment(&cfg, Some(1)).unwrap();
        assert_eq!(out.trace.rounds(), 1);
        assert_eq!(out.trace.num_trials(), 1);
    }

    #[test]
    fn noiseless_greedy_rounds_have_no_regret() {
        let cfg = config(
            r#"{"features": [[2,3],[4,5],[2,1]], "instance": {"mu": [10, 20, 5]},
                "algorithm": {"eps_greedy": {}}, "horizon": 2000, "trials": 3, "noise_sigma": 0}"#,
        );
        let out = run_experiment(&cfg, None).unwrap();
        for t in &out.trials {
            assert_eq!(t.exploit_regret, 0.0);
            assert_eq!(t.forced_rounds, 2);
        }
    }

    #[test]
    fn results_independent_of_jobs() {
        let cfg = config(
            r#"{"features": [[2,3],[4,5],[2,1]], "instance": {"mu": [10, 20, 5]},
                "algorithm": {"linucb": {}}, "horizon": 300, "trials": 4}"#,
        );
        let a = run_experiment(&cfg, Some(1)).unwrap();
        let b = run_experiment(&cfg, Some(3)).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn non_robust_instance_is_refused() {
        let text = r#"{"features": [[3],[1]], "instance": {"mu": [3, 20]}, "algorithm": {"eps_greedy": {}},
                "horizon": 10, "trials": 1}"#;
        assert!(matches!(
            run_experiment(&config(text), Some(1)),
            Err(HarnessError::NotRobust(_))
        ));
        let mut cfg = config(text);
        cfg.allow_nonrobust = true;
        assert!(run_experiment(&cfg, Some(1)).is_ok());
    }
}
