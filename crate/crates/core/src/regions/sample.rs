use rand::Rng;
use serde::Serialize;

use crate::linalg::{FeatureMatrix, RewardInstance};
use crate::rng::{stream_rng, Stream, StreamRng};

use super::{ContextLayout, RegionError, RobustRegion};

/// Rejections tolerated per requested instance.
pub const DEFAULT_MAX_DRAWS: u64 = 1_000_000;

/// One candidate drawn by a [`RejectionSampler`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionPoint {
    pub mu: Vec<f64>,
    pub accepted: bool,
}

/// Uniform rejection sampling from `[low, high]^K` restricted to a robust
/// region.
#[derive(Debug)]
pub struct RejectionSampler<'a> {
    region: &'a RobustRegion,
    low: f64,
    high: f64,
    rng: StreamRng,
    max_draws: u64,
    draws: u64,
    accepted: u64,
    points: Vec<RegionPoint>,
    point_cap: usize,
}

impl<'a> RejectionSampler<'a> {
    pub fn new(region: &'a RobustRegion, low: f64, high: f64, seed: u64) -> Result<Self, RegionError> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(RegionError::InvalidInstance(format!(
                "sampling box [{low}, {high}] must be finite with low < high"
            )));
        }
        Ok(Self {
            region,
            low,
            high,
            rng: stream_rng(seed, Stream::RegionSampling),
            max_draws: DEFAULT_MAX_DRAWS,
            draws: 0,
            accepted: 0,
            points: Vec::new(),
            point_cap: 0,
        })
    }

    pub fn with_max_draws(mut self, max_draws: u64) -> Self {
        self.max_draws = max_draws;
        self
    }

    /// Keeps the first `cap` candidates, accepted or not.
    pub fn record_points(mut self, cap: usize) -> Self {
        self.point_cap = cap;
        self
    }

    pub fn points(&self) -> &[RegionPoint] {
        &self.points
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.accepted as f64 / self.draws as f64
        }
    }

    pub fn next_instance(&mut self) -> Result<RewardInstance, RegionError> {
        let k = self.region.layout().total();
        let mut mu = vec![0.0; k];
        for _ in 0..self.max_draws {
            for v in mu.iter_mut() {
                *v = self.rng.random_range(self.low..self.high);
            }
            self.draws += 1;
            let accepted = self.region.contains(&mu);
            if self.points.len() < self.point_cap {
                self.points.push(RegionPoint {
                    mu: mu.clone(),
                    accepted,
                });
            }
            if accepted {
                self.accepted += 1;
                return Ok(RewardInstance::new(mu)?);
            }
        }
        Err(RegionError::RegionTooThin {
            draws: self.draws,
            acceptance_rate: self.acceptance_rate(),
        })
    }
}

/// A reward vector drawn uniformly from `[low, high]^K ∩ C_k`.
pub fn sample_robust_instance(
    phi: &FeatureMatrix,
    k: usize,
    box_low: f64,
    box_high: f64,
    seed: u64,
) -> Result<RewardInstance, RegionError> {
    let region = RobustRegion::new(phi, ContextLayout::bandit(phi.num_arms()), &[k])?;
    RejectionSampler::new(&region, box_low, box_high, seed)?.next_instance()
}
