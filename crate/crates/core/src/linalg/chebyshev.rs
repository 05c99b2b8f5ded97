//! ℓ∞ distance from a reward vector to the column space of the features.

use crate::lp::{LinearProgram, Relation};

use super::{norm_inf, FeatureMatrix, RewardInstance};

/// Solution of `min_θ max_i |φ_iᵀθ − μ_i|` together with a dual certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevFit {
    /// Primal optimum `ρ`.
    pub rho: f64,
    pub theta: Vec<f64>,
    /// `max μᵀw` over `Φᵀw = 0, ‖w‖₁ ≤ 1`; equals `rho` at optimality.
    pub dual_bound: f64,
    pub dual_weights: Vec<f64>,
}

impl ChebyshevFit {
    pub fn duality_gap(&self) -> f64 {
        (self.rho - self.dual_bound).abs()
    }
}

pub fn chebyshev_fit(phi: &FeatureMatrix, mu: &RewardInstance) -> ChebyshevFit {
    let (k, d) = (phi.num_arms(), phi.dim());
    let y = mu.values();
    debug_assert_eq!(k, y.len());

    // Variables (θ_1..θ_d free, ε ≥ 0).
    let mut objective = vec![0.0; d + 1];
    objective[d] = 1.0;
    let mut primal = LinearProgram::new(d + 1).minimize(objective);
    for j in 0..d {
        primal.set_free(j);
    }
    for i in 0..k {
        let mut row = phi.row(i).to_vec();
        row.push(-1.0);
        primal.add_constraint(row.clone(), Relation::LessEq, y[i]);
        row[d] = 1.0;
        primal.add_constraint(row, Relation::GreaterEq, y[i]);
    }
    // θ = 0, ε = ‖μ‖∞ is feasible and ε ≥ 0 bounds the objective.
    let p = primal.solve().expect("Chebyshev primal is feasible and bounded");

    // Variables (u, v) ≥ 0 with w = u − v.
    let mut objective: Vec<f64> = y.iter().map(|v| -v).collect();
    objective.extend(y.iter().copied());
    let mut dual = LinearProgram::new(2 * k).minimize(objective);
    for j in 0..d {
        let mut row: Vec<f64> = (0..k).map(|i| phi.row(i)[j]).collect();
        row.extend((0..k).map(|i| -phi.row(i)[j]));
        dual.add_constraint(row, Relation::Equal, 0.0);
    }
    dual.add_constraint(vec![1.0; 2 * k], Relation::LessEq, 1.0);
    // w = 0 is feasible and |μᵀw| ≤ ‖μ‖∞ on the ℓ1 ball.
    let q = dual.solve().expect("Chebyshev dual is feasible and bounded");

    let fit = ChebyshevFit {
        rho: p.x[d].max(0.0),
        theta: p.x[..d].to_vec(),
        dual_bound: -q.objective,
        dual_weights: (0..k).map(|i| q.x[i] - q.x[k + i]).collect(),
    };
    let tol = 1e-8 * (1.0 + norm_inf(y));
    if fit.duality_gap() > tol {
        log::warn!(
            "Chebyshev fit duality gap {} exceeds {tol}",
            fit.duality_gap()
        );
    }
    fit
}

/// `ρ = min_θ ‖Φθ − μ‖∞`
pub fn chebyshev_misspec(phi: &FeatureMatrix, mu: &RewardInstance) -> f64 {
    chebyshev_fit(phi, mu).rho
}
