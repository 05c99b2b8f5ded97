use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{EpsGreedyConfig, InitMode, LinUcbConfig};
use crate::linalg::FeatureMatrix;
use crate::regions::{check_context_probs, ContextLayout};

use super::HarnessError;

/// Context block: arms per context and arrival probabilities. The number of
/// contexts is `rows / num_arms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextualSpec {
    pub num_arms: usize,
    pub context_probs: Vec<f64>,
}

/// Contents of a feature file: either a bare array of rows or an object
/// with a `features` array and an optional `contextual` block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureFile {
    Rows(Vec<Vec<f64>>),
    Described {
        features: Vec<Vec<f64>>,
        #[serde(default)]
        contextual: Option<ContextualSpec>,
    },
}

/// Feature rows given inline or as a path to a [`FeatureFile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeaturesSource {
    Inline(Vec<Vec<f64>>),
    Path(PathBuf),
}

/// Validated features with their context structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub features: FeatureMatrix,
    pub layout: ContextLayout,
    pub context_probs: Vec<f64>,
}

impl Problem {
    pub fn new(rows: Vec<Vec<f64>>, contextual: Option<&ContextualSpec>) -> Result<Self, HarnessError> {
        let features = FeatureMatrix::new(&rows)?;
        let total = features.num_arms();
        let (layout, context_probs) = match contextual {
            None => (ContextLayout::bandit(total), vec![1.0]),
            Some(spec) => {
                if spec.num_arms == 0 || total % spec.num_arms != 0 {
                    return Err(HarnessError::Config(format!(
                        "{total} feature rows do not split into contexts of {} arms",
                        spec.num_arms
                    )));
                }
                let layout = ContextLayout {
                    num_contexts: total / spec.num_arms,
                    num_arms: spec.num_arms,
                };
                check_context_probs(&spec.context_probs, layout.num_contexts)?;
                (layout, spec.context_probs.clone())
            }
        };
        Ok(Self {
            features,
            layout,
            context_probs,
        })
    }

    pub fn is_contextual(&self) -> bool {
        self.layout.num_contexts > 1
    }

    /// Reads a [`FeatureFile`]; `contextual` overrides a block in the file.
    pub fn load(path: &Path, contextual: Option<&ContextualSpec>) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: FeatureFile = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        match file {
            FeatureFile::Rows(rows) => Self::new(rows, contextual),
            FeatureFile::Described {
                features,
                contextual: own,
            } => Self::new(features, contextual.or(own.as_ref())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Target arm per context, 1-based.
    pub arms: Vec<usize>,
    #[serde(rename = "box")]
    pub bounds: [f64; 2],
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSpec {
    /// Explicit rewards in stacked row order.
    Mu(Vec<f64>),
    /// Rejection-sample from the robust region of the given arms.
    Sample(SampleSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmSpec {
    EpsGreedy(EpsGreedyConfig),
    Linucb(LinUcbConfig),
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::EpsGreedy(_) => "eps_greedy",
            AlgorithmSpec::Linucb(_) => "linucb",
        }
    }

    pub fn init(&self) -> InitMode {
        match self {
            AlgorithmSpec::EpsGreedy(c) => c.init,
            AlgorithmSpec::Linucb(c) => c.init,
        }
    }
}

fn default_horizon() -> usize {
    20_000
}

fn default_trials() -> usize {
    10
}

fn default_sigma() -> f64 {
    0.5
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: a problem, an instance, an algorithm and the trial
/// protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub features: FeaturesSource,
    #[serde(default)]
    pub contextual: Option<ContextualSpec>,
    pub instance: InstanceSpec,
    pub algorithm: AlgorithmSpec,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    /// Test membership in the ridge-regularized region with this λ.
    #[serde(default)]
    pub membership_ridge: Option<f64>,
    #[serde(default)]
    pub allow_nonrobust: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses a config; relative feature paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, HarnessError> {
        let mut cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if let (FeaturesSource::Path(p), Some(base)) = (&mut cfg.features, base_dir) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon == 0 {
            return Err(HarnessError::Config("horizon must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(HarnessError::Config(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if let InstanceSpec::Sample(s) = &self.instance {
            if s.arms.contains(&0) {
                return Err(HarnessError::Config("sample arms are 1-based".into()));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem, HarnessError> {
        match &self.features {
            FeaturesSource::Inline(rows) => Problem::new(rows.clone(), self.contextual.as_ref()),
            FeaturesSource::Path(p) => Problem::load(p, self.contextual.as_ref()),
        }
    }
}
