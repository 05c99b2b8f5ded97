//! ε-greedy and LinUCB agents for bandit and contextual problems, sharing a
//! pooled least-squares state.

mod agents;
mod state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, FeatureMatrix, LinalgError, RewardInstance};
use crate::regions::{
    greedy_optimal_arm, ContextLayout, ContextualInstance, RegionError, RobustRegion,
};

pub use agents::{
    eps_greedy_action, linucb_action, Action, ActionKind, Agent, EpsilonGreedy, LinUcb,
};
pub use state::{lse_update, LseState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("design matrix is singular; no estimate available")]
    SingularDesign,
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error("context {context} out of range for {num_contexts} contexts")]
    ContextOutOfRange { context: usize, num_contexts: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// How the design matrix is made invertible.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Play linearly independent arms until the design is invertible.
    #[default]
    ForcedBasis,
    /// Start from `V = λI`.
    Ridge(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsGreedyConfig {
    #[serde(default)]
    pub init: InitMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinUcbConfig {
    /// Sub-Gaussian scale of the reward noise.
    #[serde(default = "LinUcbConfig::default_r")]
    pub r: f64,
    /// Confidence level of the ellipsoid.
    #[serde(default = "LinUcbConfig::default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub init: InitMode,
}

impl LinUcbConfig {
    fn default_r() -> f64 {
        0.5
    }

    fn default_delta() -> f64 {
        0.05
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(AgentError::InvalidConfig(format!("R must be nonnegative, got {}", self.r)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AgentError::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

impl Default for LinUcbConfig {
    fn default() -> Self {
        Self {
            r: Self::default_r(),
            delta: Self::default_delta(),
            init: InitMode::ForcedBasis,
        }
    }
}

/// `ε_t = 1/√t`, `t ≥ 1`.
pub fn epsilon(t: u64) -> f64 {
    1.0 / (t.max(1) as f64).sqrt()
}

/// `β_t(δ) = 2R² log((1 + t/d)^{d/2} / δ)`
pub fn beta(t: u64, dim: usize, r: f64, delta: f64) -> f64 {
    let d = dim as f64;
    2.0 * r * r * (0.5 * d * (1.0 + t as f64 / d).ln() - delta.ln())
}

/// High-probability cap on the number of sub-optimal LinUCB plays up to
/// round `t`:
/// `(4√t R / Δ_min) √log((1+t/d)^{d/2}/δ) √log((1+t/d)^d)`.
pub fn suboptimal_play_bound(t: u64, dim: usize, r: f64, delta: f64, delta_min: f64) -> f64 {
    let d = dim as f64;
    let tf = t as f64;
    let growth = (1.0 + tf / d).ln();
    4.0 * tf.sqrt() * r / delta_min
        * (0.5 * d * growth - delta.ln()).sqrt()
        * (d * growth).sqrt()
}

/// Features of every context-arm pair with their layout. A plain bandit is
/// the single-context case.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmSet {
    features: FeatureMatrix,
    layout: ContextLayout,
}

impl ArmSet {
    pub fn new(features: FeatureMatrix, layout: ContextLayout) -> Result<Self, AgentError> {
        if layout.total() != features.num_arms() || layout.total() == 0 {
            return Err(AgentError::InvalidConfig(format!(
                "{} feature rows for {} contexts × {} arms",
                features.num_arms(),
                layout.num_contexts,
                layout.num_arms
            )));
        }
        Ok(Self { features, layout })
    }

    pub fn bandit(features: FeatureMatrix) -> Self {
        let layout = ContextLayout::bandit(features.num_arms());
        Self { features, layout }
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn layout(&self) -> ContextLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn num_arms(&self) -> usize {
        self.layout.num_arms
    }

    pub fn feature(&self, context: usize, arm: usize) -> &[f64] {
        self.features.row(self.layout.row(context, arm))
    }

    fn check_context(&self, context: usize) -> Result<(), AgentError> {
        if context >= self.layout.num_contexts {
            return Err(AgentError::ContextOutOfRange {
                context,
                num_contexts: self.layout.num_contexts,
            });
        }
        Ok(())
    }

    /// `argmax_a φ(x, a)ᵀ θ`, ties to the lowest index.
    pub fn greedy_arm(&self, context: usize, theta: &[f64]) -> usize {
        let scores: Vec<f64> = (0..self.num_arms())
            .map(|a| dot(self.feature(context, a), theta))
            .collect();
        crate::linalg::argmax_lowest(&scores)
    }
}

/// `Δ_min` in model space: the smallest estimated gap between the optimal
/// arm and any other arm over all sampling distributions, attained at a basic
/// solution.
pub fn model_space_gap(phi: &FeatureMatrix, mu: &RewardInstance) -> Result<f64, RegionError> {
    let k = greedy_optimal_arm(mu)?;
    let region = RobustRegion::new(phi, ContextLayout::bandit(phi.num_arms()), &[k])?;
    if !region.contains(mu.values()) {
        return Err(RegionError::NotMember);
    }
    Ok(region.model_gap(mu.values()))
}

/// [`model_space_gap`] over every context and its suboptimal arms.
pub fn model_space_gap_contextual(instance: &ContextualInstance) -> Result<f64, RegionError> {
    let region = RobustRegion::new(instance.features(), instance.layout(), instance.optimal_arms())?;
    if !region.contains(instance.rewards().values()) {
        return Err(RegionError::NotMember);
    }
    Ok(region.model_gap(instance.rewards().values()))
}
