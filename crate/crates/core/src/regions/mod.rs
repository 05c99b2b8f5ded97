//! Greedy and robust parameter regions as open polyhedral cones, robust
//! observation region membership via basic solutions, interior margins, and
//! rejection sampling of robust instances.

mod halfspace;
mod robust;
mod sample;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{strict_argmax, FeatureMatrix, LinalgError, RewardInstance};

pub use halfspace::{param_region, param_region_contains, HalfspaceSystem};
pub use robust::{
    contextual_param_region, contextual_param_region_for, interior_margin, robust_membership,
    robust_membership_contextual, robust_membership_ridge, RobustMembershipReport, RobustRegion,
    Violation,
};
pub use sample::{
    sample_robust_instance, RegionPoint, RejectionSampler, DEFAULT_MAX_DRAWS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("optimal arm is tied{}", context.map(|x| format!(" in context {x}")).unwrap_or_default())]
    TiedOptimum { context: Option<usize> },
    #[error("arm {arm} and arm {other} have identical features; the region is empty")]
    DegenerateRegion { arm: usize, other: usize },
    #[error("constraint {0} is the zero vector")]
    ZeroConstraint(usize),
    #[error("parameter region is empty")]
    EmptyRegion,
    #[error("instance is not in the robust observation region")]
    NotMember,
    #[error("no robust instance after {draws} draws (acceptance rate ≈ {acceptance_rate})")]
    RegionTooThin { draws: u64, acceptance_rate: f64 },
    #[error("arm {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Row layout of stacked context-arm features: `row(x, a) = x·|A| + a`.
/// A plain bandit is a single context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextLayout {
    pub num_contexts: usize,
    pub num_arms: usize,
}

impl ContextLayout {
    pub fn bandit(num_arms: usize) -> Self {
        Self {
            num_contexts: 1,
            num_arms,
        }
    }

    #[inline]
    pub fn row(&self, context: usize, arm: usize) -> usize {
        context * self.num_arms + arm
    }

    pub fn total(&self) -> usize {
        self.num_contexts * self.num_arms
    }

    pub fn rows(&self, context: usize) -> std::ops::Range<usize> {
        let start = context * self.num_arms;
        start..start + self.num_arms
    }

    /// Unique best arm of each context.
    pub fn optimal_arms(&self, mu: &[f64]) -> Result<Vec<usize>, RegionError> {
        if mu.len() != self.total() {
            return Err(RegionError::InvalidInstance(format!(
                "{} rewards for {} context-arm pairs",
                mu.len(),
                self.total()
            )));
        }
        (0..self.num_contexts)
            .map(|x| {
                strict_argmax(&mu[self.rows(x)]).ok_or(RegionError::TiedOptimum {
                    context: (self.num_contexts > 1).then_some(x),
                })
            })
            .collect()
    }

    fn check(&self, features: &FeatureMatrix) -> Result<(), RegionError> {
        if self.num_contexts == 0 || self.num_arms == 0 {
            return Err(RegionError::InvalidInstance("empty context layout".into()));
        }
        if features.num_arms() != self.total() {
            return Err(RegionError::InvalidInstance(format!(
                "{} feature rows for {} contexts × {} arms",
                features.num_arms(),
                self.num_contexts,
                self.num_arms
            )));
        }
        Ok(())
    }
}

/// Index of the unique largest reward.
pub fn greedy_optimal_arm(mu: &RewardInstance) -> Result<usize, RegionError> {
    mu.optimal_arm().ok_or(RegionError::TiedOptimum { context: None })
}

/// Features, rewards and arrival probabilities of a finite-context bandit.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualInstance {
    features: FeatureMatrix,
    layout: ContextLayout,
    rewards: RewardInstance,
    context_probs: Vec<f64>,
    optimal: Vec<usize>,
}

impl ContextualInstance {
    pub fn new(
        features: FeatureMatrix,
        layout: ContextLayout,
        rewards: RewardInstance,
        context_probs: Vec<f64>,
    ) -> Result<Self, RegionError> {
        layout.check(&features)?;
        check_context_probs(&context_probs, layout.num_contexts)?;
        let optimal = layout.optimal_arms(rewards.values())?;
        Ok(Self {
            features,
            layout,
            rewards,
            context_probs,
            optimal,
        })
    }

    /// A plain bandit viewed as one context with probability one.
    pub fn single_context(phi: FeatureMatrix, mu: RewardInstance) -> Result<Self, RegionError> {
        let layout = ContextLayout::bandit(phi.num_arms());
        Self::new(phi, layout, mu, vec![1.0])
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn layout(&self) -> ContextLayout {
        self.layout
    }

    pub fn num_contexts(&self) -> usize {
        self.layout.num_contexts
    }

    pub fn num_arms(&self) -> usize {
        self.layout.num_arms
    }

    pub fn rewards(&self) -> &RewardInstance {
        &self.rewards
    }

    pub fn context_probs(&self) -> &[f64] {
        &self.context_probs
    }

    /// `OPT(x)`
    pub fn optimal_arm(&self, context: usize) -> usize {
        self.optimal[context]
    }

    pub fn optimal_arms(&self) -> &[usize] {
        &self.optimal
    }

    /// `μ_{x,a}`
    pub fn reward(&self, context: usize, arm: usize) -> f64 {
        self.rewards.values()[self.layout.row(context, arm)]
    }

    /// `φ(x, a)`
    pub fn feature(&self, context: usize, arm: usize) -> &[f64] {
        self.features.row(self.layout.row(context, arm))
    }
}

pub fn check_context_probs(probs: &[f64], num_contexts: usize) -> Result<(), RegionError> {
    if probs.len() != num_contexts {
        return Err(RegionError::InvalidInstance(format!(
            "{} context probabilities for {num_contexts} contexts",
            probs.len()
        )));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(RegionError::InvalidInstance(
            "every context probability must be positive".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(RegionError::InvalidInstance(format!(
            "context probabilities sum to {total}"
        )));
    }
    Ok(())
}
