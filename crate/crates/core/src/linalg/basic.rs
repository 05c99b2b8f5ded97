//! Basic solutions `Φ_J⁻¹ μ_J` over all full-rank `d × d` row subsets, and
//! the determinant weights expressing a weighted least-squares estimate as
//! their convex combination.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{FeatureMatrix, LinalgError, Lu, Matrix, RewardInstance, SamplingWeights, PIVOT_TOLERANCE};

/// Lexicographic iterator over the `k`-subsets of `0..n`.
#[derive(Clone, Debug)]
pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Subsets {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Self { n, current }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        // Rightmost position that can still be advanced.
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                return Some(out);
            }
            i -= 1;
            if next[i] < self.n - k + i {
                break;
            }
        }
        next[i] += 1;
        for j in (i + 1)..k {
            next[j] = next[j - 1] + 1;
        }
        self.current = Some(next);
        Some(out)
    }
}

/// Binomial coefficient `C(n, k)`, saturating at `u128::MAX`.
pub fn subset_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasicSolution {
    /// Row indices `J`, increasing.
    pub subset: Vec<usize>,
    pub theta: Vec<f64>,
    /// `det Φ_J`
    pub det: f64,
}

/// Every basic solution of a feature matrix, ordered lexicographically by
/// subset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasicSolutionSet {
    pub entries: Vec<BasicSolution>,
}

impl BasicSolutionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BasicSolution> {
        self.entries.iter()
    }
}

impl<'a> IntoIterator for &'a BasicSolutionSet {
    type Item = &'a BasicSolution;
    type IntoIter = std::slice::Iter<'a, BasicSolution>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Full-rank `d × d` row subsets of `features` with their factorizations.
pub(crate) fn full_rank_subsets(features: &Matrix) -> impl Iterator<Item = (Vec<usize>, Lu)> + '_ {
    Subsets::new(features.rows(), features.cols()).filter_map(move |subset| {
        let lu = Lu::new(&features.select_rows(&subset)).ok()?;
        (lu.determinant().abs() > PIVOT_TOLERANCE).then_some((subset, lu))
    })
}

/// Basic solutions of an arbitrary full-column-rank matrix and right-hand
/// side (used for augmented and stacked contextual matrices too).
pub fn basic_solutions_of(features: &Matrix, rhs: &[f64]) -> BasicSolutionSet {
    let entries = full_rank_subsets(features)
        .map(|(subset, lu)| {
            let local: Vec<f64> = subset.iter().map(|&i| rhs[i]).collect();
            BasicSolution {
                theta: lu.solve(&local),
                det: lu.determinant(),
                subset,
            }
        })
        .collect();
    BasicSolutionSet { entries }
}

pub fn enumerate_basic_solutions(phi: &FeatureMatrix, mu: &RewardInstance) -> BasicSolutionSet {
    debug_assert_eq!(phi.num_arms(), mu.len());
    basic_solutions_of(phi.as_matrix(), mu.values())
}

/// Convex weights `det(Λ_J) det(Φ_J)² / Σ_K det(Λ_K) det(Φ_K)²` over the
/// full-rank subsets `J`. With these weights the basic solutions average to
/// the weighted least-squares estimate under `Λ`.
pub fn forsgren_weights(
    phi: &FeatureMatrix,
    lam: &SamplingWeights,
) -> Result<BTreeMap<Vec<usize>, f64>, LinalgError> {
    if lam.len() != phi.num_arms() {
        return Err(LinalgError::DimensionMismatch {
            expected: phi.num_arms(),
            found: lam.len(),
        });
    }
    if !lam.design_invertible(phi) {
        return Err(LinalgError::SingularDesign);
    }
    let w = lam.as_slice();
    let mut raw: BTreeMap<Vec<usize>, f64> = full_rank_subsets(phi.as_matrix())
        .map(|(subset, lu)| {
            let det = lu.determinant();
            let weight = subset.iter().map(|&i| w[i]).product::<f64>() * det * det;
            (subset, weight)
        })
        .collect();
    let total: f64 = raw.values().sum();
    if !(total > 0.0) {
        return Err(LinalgError::SingularDesign);
    }
    for v in raw.values_mut() {
        *v /= total;
    }
    Ok(raw)
}
