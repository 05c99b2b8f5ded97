use serde::Serialize;

use crate::linalg::{
    augment_ridge, dot, full_rank_subsets, norm_inf, FeatureMatrix, LinalgError, Lu,
    RewardInstance, SamplingWeights,
};

use super::halfspace::region_of_rows;
use super::{greedy_optimal_arm, ContextLayout, ContextualInstance, HalfspaceSystem, RegionError};

/// Margins at or below this multiple of `‖μ‖∞` raise a boundary warning.
const BOUNDARY_WARNING: f64 = 1e-9;

/// A basic solution that falls outside the target parameter region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub subset: Vec<usize>,
    pub theta: Vec<f64>,
    /// Index into the constraints of the parameter region.
    pub constraint: usize,
    pub context: usize,
    /// The competing arm of the violated constraint.
    pub arm: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustMembershipReport {
    pub is_member: bool,
    /// One entry per context; a bandit has one context.
    pub optimal_arms: Vec<usize>,
    pub violating_subsets: Vec<Violation>,
    /// Signed ℓ∞ margin: the interior margin for members, minus the distance
    /// past the most violated membership constraint otherwise.
    pub margin: f64,
    pub boundary_warning: bool,
    /// The target parameter region itself is empty.
    pub empty_region: bool,
}

/// Robust observation region for fixed target arms, with the basic-solution
/// factorizations precomputed so that many reward vectors can be tested
/// cheaply.
#[derive(Clone, Debug)]
pub struct RobustRegion {
    layout: ContextLayout,
    targets: Vec<usize>,
    system: HalfspaceSystem,
    /// `(context, competing arm)` of each constraint of `system`.
    labels: Vec<(usize, usize)>,
    bases: Vec<(Vec<usize>, Lu)>,
    /// Reward entries; rows of the factored matrix past this are
    /// regularizer rows with target zero.
    num_rewards: usize,
    /// Every membership condition as `cᵀμ > 0`, stored with `‖c‖₁`.
    mu_constraints: Vec<(Vec<f64>, f64)>,
    empty: bool,
}

impl RobustRegion {
    /// Region for arm `targets[x]` optimal at every context `x`.
    pub fn new(
        features: &FeatureMatrix,
        layout: ContextLayout,
        targets: &[usize],
    ) -> Result<Self, RegionError> {
        layout.check(features)?;
        let bases = full_rank_subsets(features.as_matrix()).collect();
        Self::build(features, layout, targets, bases, layout.total())
    }

    /// Ridge-regularized region of a bandit: basic solutions of the
    /// augmented matrix `[Φ; √λ I]` with targets `(μ, 0)`, leaving out the
    /// subset made only of regularizer rows.
    pub fn ridge(phi: &FeatureMatrix, k: usize, ridge: f64) -> Result<Self, RegionError> {
        let k_arms = phi.num_arms();
        let aug = augment_ridge(phi, &SamplingWeights::uniform(k_arms), &vec![0.0; k_arms], ridge)?;
        let pure: Vec<usize> = (k_arms..k_arms + phi.dim()).collect();
        let bases = full_rank_subsets(aug.features.as_matrix())
            .filter(|(s, _)| *s != pure)
            .collect();
        Self::build(phi, ContextLayout::bandit(k_arms), &[k], bases, k_arms)
    }

    fn build(
        features: &FeatureMatrix,
        layout: ContextLayout,
        targets: &[usize],
        bases: Vec<(Vec<usize>, Lu)>,
        num_rewards: usize,
    ) -> Result<Self, RegionError> {
        if targets.len() != layout.num_contexts {
            return Err(RegionError::InvalidInstance(format!(
                "{} target arms for {} contexts",
                targets.len(),
                layout.num_contexts
            )));
        }
        let mut systems = Vec::with_capacity(layout.num_contexts);
        let mut labels = Vec::new();
        for (x, &k) in targets.iter().enumerate() {
            systems.push(region_of_rows(
                features.as_matrix(),
                layout.row(x, 0),
                layout.num_arms,
                k,
            )?);
            labels.extend((0..layout.num_arms).filter(|&a| a != k).map(|a| (x, a)));
        }
        let system = HalfspaceSystem::intersect(&systems);
        let empty = system.is_empty();

        let mut mu_constraints = Vec::new();
        for (x, &k) in targets.iter().enumerate() {
            for a in (0..layout.num_arms).filter(|&a| a != k) {
                let mut c = vec![0.0; num_rewards];
                c[layout.row(x, k)] = 1.0;
                c[layout.row(x, a)] = -1.0;
                mu_constraints.push((c, 2.0));
            }
        }
        for (subset, lu) in &bases {
            for a in system.constraints() {
                // aᵀ Φ_J⁻¹ μ_J = (Φ_J⁻ᵀ a)ᵀ μ_J
                let w = lu.solve_transpose(a);
                let mut c = vec![0.0; num_rewards];
                for (&row, wi) in subset.iter().zip(w) {
                    if row < num_rewards {
                        c[row] = wi;
                    }
                }
                let norm: f64 = c.iter().map(|v| v.abs()).sum();
                mu_constraints.push((c, norm));
            }
        }

        Ok(Self {
            layout,
            targets: targets.to_vec(),
            system,
            labels,
            bases,
            num_rewards,
            mu_constraints,
            empty,
        })
    }

    pub fn system(&self) -> &HalfspaceSystem {
        &self.system
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn layout(&self) -> ContextLayout {
        self.layout
    }

    pub fn is_empty_region(&self) -> bool {
        self.empty
    }

    pub fn num_basic_solutions(&self) -> usize {
        self.bases.len()
    }

    fn check_len(&self, mu: &[f64]) -> Result<(), RegionError> {
        if mu.len() != self.num_rewards {
            return Err(RegionError::InvalidInstance(format!(
                "{} rewards, expected {}",
                mu.len(),
                self.num_rewards
            )));
        }
        Ok(())
    }

    fn solve(&self, subset: &[usize], lu: &Lu, mu: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = subset
            .iter()
            .map(|&i| if i < self.num_rewards { mu[i] } else { 0.0 })
            .collect();
        lu.solve(&rhs)
    }

    /// `(J, Φ_J⁻¹ μ_J)` for every tested subset.
    pub fn basic_solutions<'a>(
        &'a self,
        mu: &'a [f64],
    ) -> impl Iterator<Item = (&'a [usize], Vec<f64>)> + 'a {
        self.bases
            .iter()
            .map(move |(s, lu)| (s.as_slice(), self.solve(s, lu, mu)))
    }

    fn greedy_holds(&self, mu: &[f64]) -> bool {
        self.targets.iter().enumerate().all(|(x, &k)| {
            let best = mu[self.layout.row(x, k)];
            self.layout
                .rows(x)
                .all(|r| r == self.layout.row(x, k) || best > mu[r])
        })
    }

    /// Whether the targets are the unique greedy arms of `mu` and every basic
    /// solution lies in the parameter region.
    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.num_rewards
            && !self.empty
            && self.greedy_holds(mu)
            && self
                .bases
                .iter()
                .all(|(s, lu)| self.system.contains(&self.solve(s, lu, mu)))
    }

    /// `min_c cᵀμ / ‖c‖₁` over all membership conditions. Positive exactly
    /// on the interior of the region, where it is the half-width of the
    /// largest ℓ∞ cell around `mu` that stays inside.
    pub fn margin(&self, mu: &[f64]) -> f64 {
        self.mu_constraints
            .iter()
            .map(|(c, norm)| if *norm > 0.0 { dot(c, mu) / norm } else { 0.0 })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn report(&self, mu: &[f64]) -> Result<RobustMembershipReport, RegionError> {
        self.check_len(mu)?;
        let mut violating_subsets = Vec::new();
        for (subset, lu) in &self.bases {
            let theta = self.solve(subset, lu, mu);
            for constraint in self.system.violations(&theta) {
                let (context, arm) = self.labels[constraint];
                violating_subsets.push(Violation {
                    subset: subset.clone(),
                    theta: theta.clone(),
                    constraint,
                    context,
                    arm,
                });
            }
        }
        let is_member = violating_subsets.is_empty() && !self.empty && self.greedy_holds(mu);
        let margin = self.margin(mu);
        Ok(RobustMembershipReport {
            is_member,
            optimal_arms: self.targets.clone(),
            violating_subsets,
            margin,
            boundary_warning: is_member && margin <= BOUNDARY_WARNING * norm_inf(mu),
            empty_region: self.empty,
        })
    }

    /// `min (φ_{x,k} − φ_{x,a})ᵀ θ_J` over every basic solution and every
    /// constraint: the smallest estimated reward gap any sampling
    /// distribution can produce.
    pub fn model_gap(&self, mu: &[f64]) -> f64 {
        self.basic_solutions(mu)
            .flat_map(|(_, theta)| {
                self.system
                    .constraints()
                    .iter()
                    .map(|a| dot(a, &theta))
                    .collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn robust_membership(
    phi: &FeatureMatrix,
    mu: &RewardInstance,
) -> Result<RobustMembershipReport, RegionError> {
    let k = greedy_optimal_arm(mu)?;
    RobustRegion::new(phi, ContextLayout::bandit(phi.num_arms()), &[k])?.report(mu.values())
}

pub fn robust_membership_ridge(
    phi: &FeatureMatrix,
    mu: &RewardInstance,
    ridge: f64,
) -> Result<RobustMembershipReport, RegionError> {
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(LinalgError::InvalidRidge(ridge).into());
    }
    let k = greedy_optimal_arm(mu)?;
    RobustRegion::ridge(phi, k, ridge)?.report(mu.values())
}

/// `Θ^X = ∩_x Θ^x_{targets[x]}`; fails with `EmptyRegion` when no `θ`
/// satisfies every constraint.
pub fn contextual_param_region_for(
    features: &FeatureMatrix,
    layout: ContextLayout,
    targets: &[usize],
) -> Result<HalfspaceSystem, RegionError> {
    layout.check(features)?;
    if targets.len() != layout.num_contexts {
        return Err(RegionError::InvalidInstance(format!(
            "{} target arms for {} contexts",
            targets.len(),
            layout.num_contexts
        )));
    }
    let systems = targets
        .iter()
        .enumerate()
        .map(|(x, &k)| {
            region_of_rows(features.as_matrix(), layout.row(x, 0), layout.num_arms, k)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let system = HalfspaceSystem::intersect(&systems);
    if system.is_empty() {
        return Err(RegionError::EmptyRegion);
    }
    Ok(system)
}

/// [`contextual_param_region_for`] at the optimal arms of the instance.
pub fn contextual_param_region(
    instance: &ContextualInstance,
) -> Result<HalfspaceSystem, RegionError> {
    contextual_param_region_for(instance.features(), instance.layout(), instance.optimal_arms())
}

/// Basic solutions of the stacked contextual features tested against
/// `Θ^X`. An empty `Θ^X` yields a non-member with `empty_region` set.
pub fn robust_membership_contextual(
    instance: &ContextualInstance,
) -> Result<RobustMembershipReport, RegionError> {
    RobustRegion::new(instance.features(), instance.layout(), instance.optimal_arms())?
        .report(instance.rewards().values())
}

/// Half-width of the largest ℓ∞ cell around `mu` inside its robust region.
pub fn interior_margin(phi: &FeatureMatrix, mu: &RewardInstance) -> Result<f64, RegionError> {
    let report = robust_membership(phi, mu)?;
    if !report.is_member {
        return Err(RegionError::NotMember);
    }
    Ok(report.margin)
}
