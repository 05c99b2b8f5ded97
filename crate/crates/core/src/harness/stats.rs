use serde::Serialize;

use crate::linalg::{chebyshev_misspec, FeatureMatrix, RewardInstance};
use crate::regions::{ContextLayout, RobustRegion};

use super::HarnessError;

/// Summary numbers of a reward instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceStats {
    /// ℓ∞ misspecification error.
    pub rho: f64,
    /// Smallest true reward gap to the optimal arm (over all contexts).
    pub delta_min: f64,
    /// Largest true reward gap to the optimal arm (over all contexts).
    pub delta_max: f64,
    /// Interior margin; 0 for non-members.
    pub margin: f64,
    /// Smallest estimated gap over all sampling distributions; members only.
    pub model_gap: Option<f64>,
    pub member: bool,
    pub boundary_warning: bool,
}

/// Statistics of `mu` on the stacked features. With `ridge`, membership,
/// margin and model gap refer to the ridge-regularized region (bandits only).
pub fn compute_stats(
    phi: &FeatureMatrix,
    mu: &RewardInstance,
    layout: ContextLayout,
    ridge: Option<f64>,
) -> Result<InstanceStats, HarnessError> {
    let optimal = layout.optimal_arms(mu.values())?;
    let region = match ridge {
        None => RobustRegion::new(phi, layout, &optimal)?,
        Some(lambda) => {
            if layout.num_contexts != 1 {
                return Err(HarnessError::Config(
                    "ridge membership is only defined for single-context bandits".into(),
                ));
            }
            RobustRegion::ridge(phi, optimal[0], lambda)?
        }
    };
    let report = region.report(mu.values())?;

    let v = mu.values();
    let mut delta_min = f64::INFINITY;
    let mut delta_max: f64 = 0.0;
    for (x, &k) in optimal.iter().enumerate() {
        for a in (0..layout.num_arms).filter(|&a| a != k) {
            let gap = v[layout.row(x, k)] - v[layout.row(x, a)];
            delta_min = delta_min.min(gap);
            delta_max = delta_max.max(gap);
        }
    }
    if !delta_min.is_finite() {
        // A single arm per context has no gaps.
        delta_min = 0.0;
    }

    Ok(InstanceStats {
        rho: chebyshev_misspec(phi, mu),
        delta_min,
        delta_max,
        margin: if report.is_member { report.margin } else { 0.0 },
        model_gap: report.is_member.then(|| region.model_gap(v)),
        member: report.is_member,
        boundary_warning: report.boundary_warning,
    })
}
