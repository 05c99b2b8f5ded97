//! Weighted least squares and its ridge-regularized variant.

use super::{FeatureMatrix, LinalgError, Lu, Matrix, SamplingWeights};

/// Weighted least-squares estimate `(Φᵀ Λ Φ)⁻¹ Φᵀ Λ y`, the minimizer of
/// `‖Φθ − y‖` in the `Λ^{1/2}`-weighted norm.
pub fn weighted_lse(
    phi: &FeatureMatrix,
    lam: &SamplingWeights,
    y: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    weighted_lse_raw(phi.as_matrix(), lam.as_slice(), y)
}

/// [`weighted_lse`] with arbitrary nonnegative weights (play counts, or the
/// unnormalized weights of an augmented ridge problem).
pub fn weighted_lse_raw(
    features: &Matrix,
    weights: &[f64],
    y: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    check_lengths(features, weights, y)?;
    let gram = features.weighted_gram(weights);
    let lu = Lu::new(&gram)?;
    Ok(lu.solve(&weighted_moment(features, weights, y)))
}

/// Ridge estimate `(Φᵀ Λ Φ + λ I)⁻¹ Φᵀ Λ y`. Defined for every `Λ` once
/// `λ > 0`.
pub fn regularized_model_estimate(
    phi: &FeatureMatrix,
    lam: &SamplingWeights,
    y: &[f64],
    ridge: f64,
) -> Result<Vec<f64>, LinalgError> {
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(LinalgError::InvalidRidge(ridge));
    }
    let features = phi.as_matrix();
    check_lengths(features, lam.as_slice(), y)?;
    let mut gram = features.weighted_gram(lam.as_slice());
    gram.add_diagonal(ridge);
    // Positive definite by construction; only an exact zero pivot can fail.
    let lu = Lu::with_tolerance(&gram, 0.0)?;
    Ok(lu.solve(&weighted_moment(features, lam.as_slice(), y)))
}

/// Ridge problem rewritten as plain weighted least squares on stacked data:
/// `Φ* = [Φ; √λ I]`, `Λ* = diag(Λ, I)`, `y* = (y, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedProblem {
    pub features: FeatureMatrix,
    /// Not normalized: the regularizer rows carry weight one each.
    pub weights: Vec<f64>,
    pub targets: Vec<f64>,
}

impl AugmentedProblem {
    /// Weighted least squares on the augmented triple, weights taken verbatim.
    pub fn solve(&self) -> Result<Vec<f64>, LinalgError> {
        weighted_lse_raw(self.features.as_matrix(), &self.weights, &self.targets)
    }
}

pub fn augment_ridge(
    phi: &FeatureMatrix,
    lam: &SamplingWeights,
    y: &[f64],
    ridge: f64,
) -> Result<AugmentedProblem, LinalgError> {
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(LinalgError::InvalidRidge(ridge));
    }
    check_lengths(phi.as_matrix(), lam.as_slice(), y)?;
    let (k, d) = (phi.num_arms(), phi.dim());
    let scale = ridge.sqrt();
    let mut rows: Vec<Vec<f64>> = (0..k).map(|i| phi.row(i).to_vec()).collect();
    for j in 0..d {
        let mut r = vec![0.0; d];
        r[j] = scale;
        rows.push(r);
    }
    let mut weights = lam.as_slice().to_vec();
    weights.extend(std::iter::repeat_n(1.0, d));
    let mut targets = y.to_vec();
    targets.extend(std::iter::repeat_n(0.0, d));
    Ok(AugmentedProblem {
        features: FeatureMatrix::new(&rows)?,
        weights,
        targets,
    })
}

fn weighted_moment(features: &Matrix, weights: &[f64], y: &[f64]) -> Vec<f64> {
    let wy: Vec<f64> = weights.iter().zip(y).map(|(w, v)| w * v).collect();
    features.tr_mul_vec(&wy)
}

fn check_lengths(features: &Matrix, weights: &[f64], y: &[f64]) -> Result<(), LinalgError> {
    let k = features.rows();
    for len in [weights.len(), y.len()] {
        if len != k {
            return Err(LinalgError::DimensionMismatch {
                expected: k,
                found: len,
            });
        }
    }
    Ok(())
}
