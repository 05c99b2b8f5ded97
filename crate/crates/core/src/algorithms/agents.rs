use rand::Rng;
use serde::Serialize;

use crate::linalg::{argmax_lowest, dot, is_positive_semidefinite, Matrix, PIVOT_TOLERANCE};
use crate::rng::{stream_rng, Stream, StreamRng};

use super::{
    beta, epsilon, AgentError, ArmSet, EpsGreedyConfig, InitMode, LinUcbConfig, LseState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    /// Forced exploration toward an invertible design.
    Forced,
    /// Uniformly random arm.
    Explore,
    /// Argmax of the point estimate.
    Greedy,
    /// Argmax of the upper confidence index.
    Optimistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Action {
    pub arm: usize,
    pub kind: ActionKind,
}

/// Step interface driven by the experiment harness: pick an arm for the
/// observed context, then learn from its reward.
pub trait Agent: Send {
    fn select(&mut self, context: usize) -> Result<Action, AgentError>;
    fn observe(&mut self, context: usize, arm: usize, reward: f64);
    fn state(&self) -> &LseState;
}

/// Tracks the linearly independent features played while the design is
/// still singular.
#[derive(Clone, Debug)]
struct ForcedPhase {
    active: bool,
    played: Vec<Vec<f64>>,
}

impl ForcedPhase {
    fn new(active: bool) -> Self {
        Self {
            active,
            played: Vec::new(),
        }
    }

    fn raises_rank(&self, feature: &[f64]) -> bool {
        let mut rows = self.played.clone();
        rows.push(feature.to_vec());
        Matrix::from_rows(&rows).is_ok_and(|m| m.rank(PIVOT_TOLERANCE) == rows.len())
    }

    /// Lowest-index arm of `context` whose feature is independent of those
    /// already played.
    fn pick(&self, arms: &ArmSet, context: usize) -> Option<usize> {
        (0..arms.num_arms()).find(|&a| self.raises_rank(arms.feature(context, a)))
    }

    fn record(&mut self, feature: &[f64]) {
        if self.raises_rank(feature) {
            self.played.push(feature.to_vec());
        }
    }
}

fn uniform_arm(u: f64, num_arms: usize) -> usize {
    ((u * num_arms as f64) as usize).min(num_arms - 1)
}

/// One post-initialization ε-greedy step at round `t ≥ 1`. Always draws
/// exactly two uniforms: the exploration coin, then the arm.
pub fn eps_greedy_action(
    state: &LseState,
    arms: &ArmSet,
    context: usize,
    t: u64,
    rng: &mut StreamRng,
) -> Result<Action, AgentError> {
    arms.check_context(context)?;
    let coin: f64 = rng.random();
    let u: f64 = rng.random();
    if coin < epsilon(t) {
        return Ok(Action {
            arm: uniform_arm(u, arms.num_arms()),
            kind: ActionKind::Explore,
        });
    }
    let theta = state.theta_hat().ok_or(AgentError::SingularDesign)?;
    Ok(Action {
        arm: arms.greedy_arm(context, theta),
        kind: ActionKind::Greedy,
    })
}

/// `argmax_a φ(x,a)ᵀθ̂ + √β_t ‖φ(x,a)‖_{V⁻¹}` with `t` the number of
/// updates in `state`.
pub fn linucb_action(
    state: &LseState,
    config: &LinUcbConfig,
    arms: &ArmSet,
    context: usize,
) -> Result<usize, AgentError> {
    arms.check_context(context)?;
    let theta = state.theta_hat().ok_or(AgentError::SingularDesign)?;
    let width = beta(state.rounds(), arms.dim(), config.r, config.delta).sqrt();
    let mut index = Vec::with_capacity(arms.num_arms());
    for a in 0..arms.num_arms() {
        let phi = arms.feature(context, a);
        let bonus = state.inverse_norm(phi).ok_or(AgentError::SingularDesign)?;
        index.push(dot(phi, theta) + width * bonus);
    }
    Ok(argmax_lowest(&index))
}

fn initial_state(dim: usize, init: InitMode) -> Result<LseState, AgentError> {
    Ok(match init {
        InitMode::ForcedBasis => LseState::new(dim),
        InitMode::Ridge(lambda) => LseState::with_ridge(dim, lambda)?,
    })
}

/// ε-greedy with `ε_t = 1/√t` over a pooled least-squares estimate.
#[derive(Clone, Debug)]
pub struct EpsilonGreedy {
    arms: ArmSet,
    state: LseState,
    forced: ForcedPhase,
    rng: StreamRng,
    round: u64,
}

impl EpsilonGreedy {
    pub fn new(arms: ArmSet, config: EpsGreedyConfig, seed: u64) -> Result<Self, AgentError> {
        let state = initial_state(arms.dim(), config.init)?;
        Ok(Self {
            forced: ForcedPhase::new(config.init == InitMode::ForcedBasis),
            arms,
            state,
            rng: stream_rng(seed, Stream::Exploration),
            round: 0,
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }
}

impl Agent for EpsilonGreedy {
    fn select(&mut self, context: usize) -> Result<Action, AgentError> {
        self.arms.check_context(context)?;
        self.round += 1;
        if self.forced.active {
            if let Some(arm) = self.forced.pick(&self.arms, context) {
                return Ok(Action {
                    arm,
                    kind: ActionKind::Forced,
                });
            }
            let _coin: f64 = self.rng.random();
            let u: f64 = self.rng.random();
            return Ok(Action {
                arm: uniform_arm(u, self.arms.num_arms()),
                kind: ActionKind::Explore,
            });
        }
        eps_greedy_action(&self.state, &self.arms, context, self.round, &mut self.rng)
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        let feature = self.arms.feature(context, arm).to_vec();
        self.state.update(&feature, reward);
        if self.forced.active {
            self.forced.record(&feature);
            if self.state.is_invertible() {
                self.forced.active = false;
            }
        }
    }

    fn state(&self) -> &LseState {
        &self.state
    }
}

/// LinUCB (OFUL) over a pooled least-squares estimate.
#[derive(Clone, Debug)]
pub struct LinUcb {
    arms: ArmSet,
    config: LinUcbConfig,
    state: LseState,
    forced: ForcedPhase,
    rng: StreamRng,
    fallback_ridge: f64,
}

impl LinUcb {
    /// Checks the feature-norm assumptions of the chosen initialization. In
    /// forced mode with `max ‖φ‖₂ = L > 1` the agent switches to
    /// `Ridge(max(1, L²))`.
    pub fn new(arms: ArmSet, config: LinUcbConfig, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let l = arms.features().max_row_norm();
        let fallback_ridge = (l * l).max(1.0);
        let mut config = config;
        match config.init {
            InitMode::Ridge(lambda) if lambda < fallback_ridge => {
                return Err(AgentError::InvalidConfig(format!(
                    "ridge {lambda} is below max(1, L²) = {fallback_ridge}"
                )));
            }
            InitMode::ForcedBasis if l > 1.0 + 1e-12 => {
                log::debug!(
                    "feature norms reach {l} > 1; using ridge initialization with λ = {fallback_ridge}"
                );
                config.init = InitMode::Ridge(fallback_ridge);
            }
            _ => {}
        }
        let state = initial_state(arms.dim(), config.init)?;
        Ok(Self {
            forced: ForcedPhase::new(config.init == InitMode::ForcedBasis),
            arms,
            config,
            state,
            rng: stream_rng(seed, Stream::Exploration),
            fallback_ridge,
        })
    }

    /// Configuration after any fallback.
    pub fn config(&self) -> &LinUcbConfig {
        &self.config
    }
}

impl Agent for LinUcb {
    fn select(&mut self, context: usize) -> Result<Action, AgentError> {
        self.arms.check_context(context)?;
        if self.forced.active {
            if let Some(arm) = self.forced.pick(&self.arms, context) {
                return Ok(Action {
                    arm,
                    kind: ActionKind::Forced,
                });
            }
            let u: f64 = self.rng.random();
            return Ok(Action {
                arm: uniform_arm(u, self.arms.num_arms()),
                kind: ActionKind::Explore,
            });
        }
        Ok(Action {
            arm: linucb_action(&self.state, &self.config, &self.arms, context)?,
            kind: ActionKind::Optimistic,
        })
    }

    fn observe(&mut self, context: usize, arm: usize, reward: f64) {
        let feature = self.arms.feature(context, arm).to_vec();
        self.state.update(&feature, reward);
        if self.forced.active {
            self.forced.record(&feature);
            if self.state.is_invertible() {
                self.forced.active = false;
                let mut shifted = self.state.gram().clone();
                shifted.add_diagonal(-1.0);
                if !is_positive_semidefinite(&shifted, 1e-10) {
                    log::debug!(
                        "forced design has minimum eigenvalue below 1; adding ridge λ = {}",
                        self.fallback_ridge
                    );
                    self.state
                        .add_ridge(self.fallback_ridge)
                        .expect("fallback ridge is at least 1");
                }
            }
        }
    }

    fn state(&self) -> &LseState {
        &self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::FeatureMatrix;
    use crate::regions::ContextLayout;

    fn two_arm() -> ArmSet {
        ArmSet::bandit(FeatureMatrix::new(&[[3.0], [1.0]]).unwrap())
    }

    fn run_noiseless(agent: &mut dyn Agent, mu: &[f64], rounds: usize) -> Vec<Action> {
        (0..rounds)
            .map(|_| {
                let a = agent.select(0).unwrap();
                agent.observe(0, a.arm, mu[a.arm]);
                a
            })
            .collect()
    }

    #[test]
    fn forced_then_greedy_never_regrets() {
        let mut agent = EpsilonGreedy::new(two_arm(), EpsGreedyConfig::default(), 3).unwrap();
        let acts = run_noiseless(&mut agent, &[20.0, 3.0], 500);
        assert_eq!(acts[0], Action { arm: 0, kind: ActionKind::Forced });
        assert!(acts[1..]
            .iter()
            .all(|a| a.kind == ActionKind::Explore || a.arm == 0));
        assert!(acts.iter().filter(|a| a.kind == ActionKind::Greedy).count() > 400);
    }

    #[test]
    fn forced_phase_uses_first_full_rank_subset() {
        let phi = FeatureMatrix::new(&[[1.0, 2.0], [2.0, 4.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let mut agent = EpsilonGreedy::new(ArmSet::bandit(phi), EpsGreedyConfig::default(), 0).unwrap();
        let acts = run_noiseless(&mut agent, &[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(acts.iter().map(|a| a.arm).collect::<Vec<_>>(), vec![0, 2]);
        assert!(acts.iter().all(|a| a.kind == ActionKind::Forced));
    }

    #[test]
    fn first_round_explores_uniformly() {
        let mut state = LseState::new(1);
        state.update(&[3.0], 20.0);
        state.update(&[1.0], 3.0);
        let mut seen = [0usize; 2];
        for seed in 0..200 {
            let mut rng = stream_rng(seed, Stream::Exploration);
            let a = eps_greedy_action(&state, &two_arm(), 0, 1, &mut rng).unwrap();
            assert_eq!(a.kind, ActionKind::Explore);
            seen[a.arm] += 1;
        }
        assert!(seen[0] > 50 && seen[1] > 50);
    }

    #[test]
    fn greedy_requires_estimate() {
        let mut rng = stream_rng(0, Stream::Exploration);
        // At large t the coin almost surely loses; scan until it does.
        let state = LseState::new(1);
        let err = (0..50)
            .find_map(|_| eps_greedy_action(&state, &two_arm(), 0, 1_000_000, &mut rng).err());
        assert_eq!(err, Some(AgentError::SingularDesign));
    }

    #[test]
    fn linucb_scalar_example() {
        let mut state = LseState::new(1);
        state.update(&[3.0], 20.0);
        state.update(&[1.0], 3.0);
        let cfg = LinUcbConfig::default();
        assert_eq!(linucb_action(&state, &cfg, &two_arm(), 0).unwrap(), 0);
        // R = 0 collapses to greedy.
        let cfg0 = LinUcbConfig { r: 0.0, ..cfg };
        assert_eq!(linucb_action(&state, &cfg0, &two_arm(), 0).unwrap(), 0);
    }

    #[test]
    fn ucb_bonus_prefers_uncertain_arm() {
        // Arm 1 barely pulled: its bonus outweighs a small estimated deficit.
        let arms = ArmSet::bandit(FeatureMatrix::new(&[[1.0, 0.0], [0.0, 1.0]]).unwrap());
        let mut state = LseState::new(2);
        for _ in 0..1000 {
            state.update(&[1.0, 0.0], 1.0);
        }
        state.update(&[0.0, 1.0], 0.9);
        let cfg = LinUcbConfig::default();
        assert_eq!(linucb_action(&state, &cfg, &arms, 0).unwrap(), 1);
        let greedy = LinUcbConfig { r: 0.0, ..cfg };
        assert_eq!(linucb_action(&state, &greedy, &arms, 0).unwrap(), 0);
    }

    #[test]
    fn linucb_falls_back_to_ridge_for_long_features() {
        let phi = FeatureMatrix::new(&[[2.0, 3.0], [4.0, 5.0], [2.0, 1.0]]).unwrap();
        let agent = LinUcb::new(ArmSet::bandit(phi.clone()), LinUcbConfig::default(), 0).unwrap();
        assert_eq!(agent.config().init, InitMode::Ridge(41.0));
        let low = LinUcbConfig {
            init: InitMode::Ridge(1.0),
            ..LinUcbConfig::default()
        };
        assert!(LinUcb::new(ArmSet::bandit(phi), low, 0).is_err());
    }

    #[test]
    fn linucb_forced_phase_with_unit_features() {
        let phi = FeatureMatrix::new(&[[1.0, 0.0], [0.0, 1.0], [0.6, 0.6]]).unwrap();
        let mut agent = LinUcb::new(ArmSet::bandit(phi), LinUcbConfig::default(), 0).unwrap();
        let acts = run_noiseless(&mut agent, &[0.2, 0.1, 0.5], 300);
        assert_eq!(acts[0].arm, 0);
        assert_eq!(acts[1].arm, 1);
        assert_eq!(agent.state().ridge(), 0.0);
        assert!(acts[2..].iter().all(|a| a.kind == ActionKind::Optimistic));
        let late = acts[200..].iter().filter(|a| a.arm == 2).count();
        assert!(late > 80, "{late}");
    }

    #[test]
    fn contextual_forced_phase_stays_in_context() {
        let phi = FeatureMatrix::new(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let layout = ContextLayout {
            num_contexts: 2,
            num_arms: 2,
        };
        let arms = ArmSet::new(phi, layout).unwrap();
        let mut agent = EpsilonGreedy::new(arms, EpsGreedyConfig::default(), 1).unwrap();
        let a = agent.select(0).unwrap();
        assert_eq!(a, Action { arm: 0, kind: ActionKind::Forced });
        agent.observe(0, 0, 1.0);
        // Context 0 has nothing new to offer: explore instead.
        assert_eq!(agent.select(0).unwrap().kind, ActionKind::Explore);
        agent.observe(0, 1, 1.0);
        assert_eq!(agent.select(1).unwrap(), Action { arm: 0, kind: ActionKind::Forced });
        agent.observe(1, 0, 1.0);
        assert!(agent.state().is_invertible());
        assert!(agent.select(3).is_err());
    }
}
