use crate::linalg::{dot, LinalgError, Lu, Matrix};

/// Running least-squares statistics `V = Σ φφᵀ (+ λI)`, `S = Σ φ y`, with the
/// solution `θ̂ = V⁻¹ S` cached whenever `V` is invertible.
#[derive(Clone, Debug)]
pub struct LseState {
    gram: Matrix,
    moment: Vec<f64>,
    rounds: u64,
    ridge: f64,
    factor: Option<Lu>,
    theta: Option<Vec<f64>>,
}

impl LseState {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: Matrix::zeros(dim, dim),
            moment: vec![0.0; dim],
            rounds: 0,
            ridge: 0.0,
            factor: None,
            theta: None,
        }
    }

    /// Starts from `V = λI`, so `θ̂ = 0` is defined immediately.
    pub fn with_ridge(dim: usize, ridge: f64) -> Result<Self, LinalgError> {
        let mut s = Self::new(dim);
        s.add_ridge(ridge)?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    /// `V += λI`
    pub fn add_ridge(&mut self, ridge: f64) -> Result<(), LinalgError> {
        if !(ridge > 0.0 && ridge.is_finite()) {
            return Err(LinalgError::InvalidRidge(ridge));
        }
        self.gram.add_diagonal(ridge);
        self.ridge += ridge;
        self.refresh();
        Ok(())
    }

    pub fn update(&mut self, feature: &[f64], reward: f64) {
        debug_assert_eq!(feature.len(), self.dim());
        self.rounds += 1;
        if feature.iter().all(|&v| v == 0.0) {
            return;
        }
        self.gram.add_outer(feature, 1.0);
        for (s, f) in self.moment.iter_mut().zip(feature) {
            *s += f * reward;
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        match Lu::new(&self.gram) {
            Ok(lu) => {
                self.theta = Some(lu.solve(&self.moment));
                self.factor = Some(lu);
            }
            Err(_) => {
                self.theta = None;
                self.factor = None;
            }
        }
    }

    pub fn theta_hat(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn is_invertible(&self) -> bool {
        self.factor.is_some()
    }

    /// `‖x‖_{V⁻¹}`
    pub fn inverse_norm(&self, x: &[f64]) -> Option<f64> {
        let lu = self.factor.as_ref()?;
        Some(dot(x, &lu.solve(x)).max(0.0).sqrt())
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn moment(&self) -> &[f64] {
        &self.moment
    }

    /// Updates seen, including zero-feature ones.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }
}

/// Functional form of [`LseState::update`].
pub fn lse_update(mut state: LseState, feature: &[f64], reward: f64) -> LseState {
    state.update(feature, reward);
    state
}
