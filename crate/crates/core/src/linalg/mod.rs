//! Dense linear algebra for the robust-region geometry: validated feature
//! matrices and reward vectors, weighted least squares, basic-solution
//! enumeration, the determinant weights that express a weighted
//! least-squares estimate as a convex combination of basic solutions, ridge
//! estimates, and the Chebyshev (ℓ∞) distance of a reward vector to the
//! model subspace.

mod basic;
mod chebyshev;
mod lse;
mod matrix;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use basic::{
    basic_solutions_of, enumerate_basic_solutions, forsgren_weights, subset_count, BasicSolution,
    BasicSolutionSet, Subsets,
};
pub(crate) use basic::full_rank_subsets;
pub use chebyshev::{chebyshev_fit, chebyshev_misspec, ChebyshevFit};
pub use lse::{
    augment_ridge, regularized_model_estimate, weighted_lse, weighted_lse_raw, AugmentedProblem,
};
pub use matrix::{dot, is_positive_semidefinite, norm_inf, Lu, Matrix, PIVOT_TOLERANCE};

/// Tolerance on `Σ weights = 1` for [`SamplingWeights`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("design matrix is numerically singular")]
    SingularDesign,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature matrix has rank {rank}, expected full column rank {cols}")]
    RankDeficient { rank: usize, cols: usize },
    #[error("invalid feature matrix: {0}")]
    InvalidFeatures(String),
    #[error("invalid reward vector: {0}")]
    InvalidRewards(String),
    #[error("invalid sampling weights: {0}")]
    InvalidWeights(String),
    #[error("ridge parameter must be positive and finite, got {0}")]
    InvalidRidge(f64),
}

/// A `K × d` matrix of arm features with `K ≥ d` and full column rank.
///
/// Row `i` is the feature vector of arm `i`. For contextual problems the
/// rows of all contexts are stacked (see `regions::ContextualInstance`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FeatureMatrix {
    matrix: Matrix,
}

impl FeatureMatrix {
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let matrix = Matrix::from_rows(rows)?;
        Self::from_matrix(matrix)
    }

    pub fn from_matrix(matrix: Matrix) -> Result<Self, LinalgError> {
        let (k, d) = (matrix.rows(), matrix.cols());
        if d == 0 {
            return Err(LinalgError::InvalidFeatures("zero columns".into()));
        }
        if k < d {
            return Err(LinalgError::InvalidFeatures(format!(
                "{k} rows is fewer than {d} columns"
            )));
        }
        if let Some(pos) = matrix.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::InvalidFeatures(format!(
                "non-finite entry in row {}",
                pos / d
            )));
        }
        let rank = matrix.rank(PIVOT_TOLERANCE);
        if rank < d {
            return Err(LinalgError::RankDeficient { rank, cols: d });
        }
        Ok(Self { matrix })
    }

    /// Number of rows `K`.
    #[inline]
    pub fn num_arms(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of columns `d`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `Φ θ`
    pub fn predict(&self, theta: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(theta)
    }

    /// Largest Euclidean row norm, the `L` of bounded-feature assumptions.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.num_arms())
            .map(|i| dot(self.row(i), self.row(i)).sqrt())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for FeatureMatrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::new(&rows)
    }
}

impl From<FeatureMatrix> for Vec<Vec<f64>> {
    fn from(phi: FeatureMatrix) -> Self {
        phi.matrix.to_rows()
    }
}

/// Vector of true mean rewards `μ`, one entry per arm (or per
/// context-arm pair).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardInstance {
    values: Vec<f64>,
}

impl RewardInstance {
    pub fn new(values: Vec<f64>) -> Result<Self, LinalgError> {
        if values.is_empty() {
            return Err(LinalgError::InvalidRewards("empty reward vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::InvalidRewards("non-finite reward".into()));
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the strict maximum, or `None` when the maximum is tied.
    pub fn optimal_arm(&self) -> Option<usize> {
        strict_argmax(&self.values)
    }

    /// `c · μ`
    pub fn scaled(&self, c: f64) -> RewardInstance {
        RewardInstance {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for RewardInstance {
    type Error = LinalgError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<RewardInstance> for Vec<f64> {
    fn from(mu: RewardInstance) -> Self {
        mu.values
    }
}

/// Index of the unique maximum of `values`, `None` on ties or empty input.
pub fn strict_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut tied = false;
    for (i, &v) in values.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if v > values[b] => {
                best = Some(i);
                tied = false;
            }
            Some(b) if v == values[b] => tied = true,
            _ => {}
        }
    }
    if tied {
        None
    } else {
        best
    }
}

/// Index of the maximum, ties broken toward the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A point of the probability simplex: the diagonal of `Λ` in a weighted
/// least-squares problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingWeights {
    weights: Vec<f64>,
}

impl SamplingWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, LinalgError> {
        if weights.is_empty() {
            return Err(LinalgError::InvalidWeights("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(LinalgError::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(LinalgError::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// Normalizes nonnegative counts (play counts, say) onto the simplex.
    pub fn from_counts(counts: &[f64]) -> Result<Self, LinalgError> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) || counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(LinalgError::InvalidWeights(
                "counts must be nonnegative with a positive total".into(),
            ));
        }
        Ok(Self {
            weights: counts.iter().map(|c| c / total).collect(),
        })
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Whether `Φᵀ Λ Φ` has every pivot above [`PIVOT_TOLERANCE`].
    pub fn design_invertible(&self, phi: &FeatureMatrix) -> bool {
        self.weights.len() == phi.num_arms()
            && Lu::new(&phi.as_matrix().weighted_gram(&self.weights)).is_ok()
    }
}
