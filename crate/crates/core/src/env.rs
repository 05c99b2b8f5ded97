//! Stochastic bandit environments with seeded Gaussian reward noise and
//! ground-truth regret accounting.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::RewardInstance;
use crate::regions::{ContextualInstance, RegionError};
use crate::rng::{stream_rng, Stream, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("arm {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },
    #[error("context {context} out of range for {num_contexts} contexts")]
    ContextOutOfRange { context: usize, num_contexts: usize },
    #[error("noise standard deviation must be finite and nonnegative, got {0}")]
    InvalidNoise(f64),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Gaussian reward noise `N(0, σ²)`; `σ = 0` gives exact rewards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub const DEFAULT_SIGMA: f64 = 0.5;

    pub fn new(sigma: f64) -> Result<Self, EnvError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(EnvError::InvalidNoise(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `mean + σ z`. A standard normal is drawn even when `σ = 0`, so the
    /// stream position never depends on the noise level.
    fn sample(&self, mean: f64, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        mean + self.sigma * z
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma: Self::DEFAULT_SIGMA,
        }
    }
}

impl TryFrom<f64> for NoiseModel {
    type Error = EnvError;

    fn try_from(sigma: f64) -> Result<Self, Self::Error> {
        Self::new(sigma)
    }
}

impl From<NoiseModel> for f64 {
    fn from(n: NoiseModel) -> f64 {
        n.sigma
    }
}

/// Uniform interface over bandit and contextual environments. A plain
/// bandit always reports context 0.
pub trait Environment {
    fn num_contexts(&self) -> usize;
    fn num_arms(&self) -> usize;
    /// Context of the next round.
    fn next_context(&mut self) -> usize;
    fn pull(&mut self, context: usize, arm: usize) -> Result<f64, EnvError>;
    /// Gap between the best arm of `context` and `arm`, from true means.
    fn instant_regret(&self, context: usize, arm: usize) -> f64;
    fn optimal_arm(&self, context: usize) -> usize;
}

#[derive(Clone, Debug)]
pub struct BanditEnv {
    mu: RewardInstance,
    best: usize,
    noise: NoiseModel,
    rng: StreamRng,
    pulls: Vec<u64>,
}

impl BanditEnv {
    pub fn new(mu: RewardInstance, noise: NoiseModel, seed: u64) -> Self {
        let best = crate::linalg::argmax_lowest(mu.values());
        let pulls = vec![0; mu.len()];
        Self {
            mu,
            best,
            noise,
            rng: stream_rng(seed, Stream::RewardNoise),
            pulls,
        }
    }

    pub fn mu(&self) -> &RewardInstance {
        &self.mu
    }

    /// `Y = μ_arm + η`
    pub fn pull(&mut self, arm: usize) -> Result<f64, EnvError> {
        let mean = *self.mu.values().get(arm).ok_or(EnvError::ArmOutOfRange {
            arm,
            num_arms: self.mu.len(),
        })?;
        self.pulls[arm] += 1;
        Ok(self.noise.sample(mean, &mut self.rng))
    }

    /// `μ* − μ_arm`
    pub fn instant_regret(&self, arm: usize) -> f64 {
        let v = self.mu.values();
        v[self.best] - v[arm]
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pulls
    }

    pub fn rounds(&self) -> u64 {
        self.pulls.iter().sum()
    }
}

impl Environment for BanditEnv {
    fn num_contexts(&self) -> usize {
        1
    }

    fn num_arms(&self) -> usize {
        self.mu.len()
    }

    fn next_context(&mut self) -> usize {
        0
    }

    fn pull(&mut self, context: usize, arm: usize) -> Result<f64, EnvError> {
        if context != 0 {
            return Err(EnvError::ContextOutOfRange {
                context,
                num_contexts: 1,
            });
        }
        BanditEnv::pull(self, arm)
    }

    fn instant_regret(&self, _context: usize, arm: usize) -> f64 {
        BanditEnv::instant_regret(self, arm)
    }

    fn optimal_arm(&self, _context: usize) -> usize {
        self.best
    }
}

#[derive(Clone, Debug)]
pub struct ContextualEnv {
    instance: ContextualInstance,
    noise: NoiseModel,
    noise_rng: StreamRng,
    context_rng: StreamRng,
    contexts: WeightedIndex<f64>,
    pulls: Vec<u64>,
}

impl ContextualEnv {
    pub fn new(instance: ContextualInstance, noise: NoiseModel, seed: u64) -> Result<Self, EnvError> {
        let contexts = WeightedIndex::new(instance.context_probs()).map_err(|e| {
            RegionError::InvalidInstance(format!("context probabilities: {e}"))
        })?;
        let pulls = vec![0; instance.layout().total()];
        Ok(Self {
            instance,
            noise,
            noise_rng: stream_rng(seed, Stream::RewardNoise),
            context_rng: stream_rng(seed, Stream::Contexts),
            contexts,
            pulls,
        })
    }

    pub fn instance(&self) -> &ContextualInstance {
        &self.instance
    }

    /// Draws `X_t` from the context distribution.
    pub fn step_context(&mut self) -> usize {
        if self.instance.num_contexts() == 1 {
            return 0;
        }
        self.contexts.sample(&mut self.context_rng)
    }

    pub fn pull(&mut self, context: usize, arm: usize) -> Result<f64, EnvError> {
        let layout = self.instance.layout();
        if context >= layout.num_contexts {
            return Err(EnvError::ContextOutOfRange {
                context,
                num_contexts: layout.num_contexts,
            });
        }
        if arm >= layout.num_arms {
            return Err(EnvError::ArmOutOfRange {
                arm,
                num_arms: layout.num_arms,
            });
        }
        self.pulls[layout.row(context, arm)] += 1;
        let mean = self.instance.reward(context, arm);
        Ok(self.noise.sample(mean, &mut self.noise_rng))
    }

    /// `μ_{x,OPT(x)} − μ_{x,a}`
    pub fn instant_regret(&self, context: usize, arm: usize) -> f64 {
        self.instance.reward(context, self.instance.optimal_arm(context))
            - self.instance.reward(context, arm)
    }

    /// Pulls per context-arm pair in the stacked row order.
    pub fn pull_counts(&self) -> &[u64] {
        &self.pulls
    }
}

impl Environment for ContextualEnv {
    fn num_contexts(&self) -> usize {
        self.instance.num_contexts()
    }

    fn num_arms(&self) -> usize {
        self.instance.num_arms()
    }

    fn next_context(&mut self) -> usize {
        self.step_context()
    }

    fn pull(&mut self, context: usize, arm: usize) -> Result<f64, EnvError> {
        ContextualEnv::pull(self, context, arm)
    }

    fn instant_regret(&self, context: usize, arm: usize) -> f64 {
        ContextualEnv::instant_regret(self, context, arm)
    }

    fn optimal_arm(&self, context: usize) -> usize {
        self.instance.optimal_arm(context)
    }
}
