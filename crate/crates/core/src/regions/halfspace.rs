use std::fmt;

use serde::Serialize;

use crate::linalg::{dot, FeatureMatrix, Matrix};
use crate::lp::{LinearProgram, LpError, Relation};

use super::RegionError;

/// Open polyhedral cone `{θ : aᵀθ > 0 for every constraint a}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfspaceSystem {
    dim: usize,
    constraints: Vec<Vec<f64>>,
}

impl HalfspaceSystem {
    /// Rejects zero constraint vectors, which would make the set empty by
    /// encoding `0 > 0`.
    pub fn new(dim: usize, constraints: Vec<Vec<f64>>) -> Result<Self, RegionError> {
        for (i, a) in constraints.iter().enumerate() {
            if a.len() != dim {
                return Err(RegionError::InvalidInstance(format!(
                    "constraint {i} has length {}, expected {dim}",
                    a.len()
                )));
            }
            if a.iter().all(|&v| v == 0.0) {
                return Err(RegionError::ZeroConstraint(i));
            }
        }
        Ok(Self { dim, constraints })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Vec<f64>] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty_system(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Strict membership with no slack.
    pub fn contains(&self, theta: &[f64]) -> bool {
        self.constraints.iter().all(|a| dot(a, theta) > 0.0)
    }

    /// Indices of the constraints `θ` fails.
    pub fn violations(&self, theta: &[f64]) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, a)| !(dot(a, theta) > 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Concatenation, i.e. the intersection of the cones.
    pub fn intersect(systems: &[HalfspaceSystem]) -> Self {
        let dim = systems.first().map_or(0, |s| s.dim);
        let constraints = systems.iter().flat_map(|s| s.constraints.iter().cloned()).collect();
        Self { dim, constraints }
    }

    /// A point with `aᵀθ ≥ 1` for every constraint, or `None` if the cone is
    /// empty. By homogeneity the open cone is nonempty exactly when such a
    /// point exists.
    pub fn interior_point(&self) -> Option<Vec<f64>> {
        if self.constraints.is_empty() {
            return Some(vec![0.0; self.dim]);
        }
        let mut lp = LinearProgram::new(self.dim);
        for j in 0..self.dim {
            lp.set_free(j);
        }
        for a in &self.constraints {
            lp.add_constraint(a.clone(), Relation::GreaterEq, 1.0);
        }
        match lp.solve() {
            Ok(sol) => Some(sol.x),
            Err(LpError::Infeasible) => None,
            Err(e) => panic!("feasibility LP with zero objective failed: {e}"),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.interior_point().is_none()
    }
}

impl fmt::Display for HalfspaceSystem {
    /// One inequality per line, e.g. `-2 θ1 - 2 θ2 > 0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.constraints {
            let mut first = true;
            for (j, &v) in a.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                if first {
                    write!(f, "{v} θ{}", j + 1)?;
                } else if v < 0.0 {
                    write!(f, " - {} θ{}", -v, j + 1)?;
                } else {
                    write!(f, " + {v} θ{}", j + 1)?;
                }
                first = false;
            }
            writeln!(f, " > 0")?;
        }
        Ok(())
    }
}

/// Strict membership of `theta` in a parameter region.
pub fn param_region_contains(region: &HalfspaceSystem, theta: &[f64]) -> bool {
    region.contains(theta)
}

/// `{(φ_k − φ_i) : i ≠ k}` over a block of rows.
pub(crate) fn region_of_rows(
    rows: &Matrix,
    start: usize,
    count: usize,
    k: usize,
) -> Result<HalfspaceSystem, RegionError> {
    if k >= count {
        return Err(RegionError::ArmOutOfRange { arm: k, num_arms: count });
    }
    let best = rows.row(start + k);
    let mut constraints = Vec::with_capacity(count - 1);
    for i in (0..count).filter(|&i| i != k) {
        let a: Vec<f64> = best.iter().zip(rows.row(start + i)).map(|(p, q)| p - q).collect();
        if a.iter().all(|&v| v == 0.0) {
            return Err(RegionError::DegenerateRegion { arm: k, other: i });
        }
        constraints.push(a);
    }
    HalfspaceSystem::new(rows.cols(), constraints)
}

/// `Θ_k = {θ : Φθ has unique maximum at k}`
pub fn param_region(phi: &FeatureMatrix, k: usize) -> Result<HalfspaceSystem, RegionError> {
    region_of_rows(phi.as_matrix(), 0, phi.num_arms(), k)
}
