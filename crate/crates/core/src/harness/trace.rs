use serde::Serialize;

use super::HarnessError;

/// Per-trial cumulative regret curves with per-round mean and population
/// standard deviation across trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretTrace {
    trials: Vec<Vec<f64>>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl RegretTrace {
    pub fn from_trials(trials: Vec<Vec<f64>>) -> Result<Self, HarnessError> {
        let rounds = trials.first().map_or(0, Vec::len);
        if trials.is_empty() || rounds == 0 || trials.iter().any(|t| t.len() != rounds) {
            return Err(HarnessError::Config(
                "regret trace needs at least one trial and equal, nonzero lengths".into(),
            ));
        }
        let n = trials.len() as f64;
        let mut mean = vec![0.0; rounds];
        let mut std = vec![0.0; rounds];
        for t in 0..rounds {
            let m = trials.iter().map(|tr| tr[t]).sum::<f64>() / n;
            let var = trials.iter().map(|tr| (tr[t] - m).powi(2)).sum::<f64>() / n;
            mean[t] = m;
            std[t] = var.sqrt();
        }
        Ok(Self { trials, mean, std })
    }

    pub fn rounds(&self) -> usize {
        self.mean.len()
    }

    pub fn num_trials(&self) -> usize {
        self.trials.len()
    }

    /// Cumulative regret of one trial; index `t − 1` holds round `t`.
    pub fn trial(&self, i: usize) -> &[f64] {
        &self.trials[i]
    }

    pub fn trials(&self) -> &[Vec<f64>] {
        &self.trials
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// `mean − 3σ` at index `i`.
    pub fn lo3(&self, i: usize) -> f64 {
        self.mean[i] - 3.0 * self.std[i]
    }

    /// `mean + 3σ` at index `i`.
    pub fn hi3(&self, i: usize) -> f64 {
        self.mean[i] + 3.0 * self.std[i]
    }

    /// Mean cumulative regret after the last round.
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("trace is nonempty")
    }
}

/// Least-squares slope of `log(mean regret)` against `log t` over the last
/// `tail_fraction` of the rounds, skipping rounds with zero mean regret.
/// Square-root growth gives 0.5, linear growth 1.
pub fn growth_exponent(trace: &RegretTrace, tail_fraction: f64) -> Result<f64, HarnessError> {
    let rounds = trace.rounds();
    if rounds < 100 {
        return Err(HarnessError::InsufficientData(format!(
            "growth exponent needs at least 100 rounds, got {rounds}"
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(HarnessError::Config(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let start = ((rounds as f64) * (1.0 - tail_fraction)).floor() as usize;
    let points: Vec<(f64, f64)> = (start..rounds)
        .filter(|&i| trace.mean[i] > 0.0)
        .map(|i| (((i + 1) as f64).ln(), trace.mean[i].ln()))
        .collect();
    if points.len() < 2 {
        return Err(HarnessError::InsufficientData(
            "fewer than two rounds with positive regret in the tail".into(),
        ));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, rounds: usize) -> RegretTrace {
        RegretTrace::from_trials(vec![(1..=rounds).map(|t| f(t as f64)).collect()]).unwrap()
    }

    #[test]
    fn exact_power_laws() {
        let sqrt = growth_exponent(&synthetic(f64::sqrt, 1000), 0.5).unwrap();
        assert!((sqrt - 0.5).abs() < 0.01);
        let lin = growth_exponent(&synthetic(|t| t, 1000), 0.5).unwrap();
        assert!((lin - 1.0).abs() < 0.01);
        assert!(matches!(
            growth_exponent(&synthetic(|t| t, 50), 0.5),
            Err(HarnessError::InsufficientData(_))
        ));
        assert!(growth_exponent(&synthetic(|_| 0.0, 500), 0.5).is_err());
    }

    #[test]
    fn population_std() {
        let tr = RegretTrace::from_trials(vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(tr.mean(), &[1.0, 2.0]);
        assert_eq!(tr.std(), &[1.0, 1.0]);
        assert_eq!(tr.hi3(0), 4.0);
        assert_eq!(tr.lo3(1), -1.0);
        assert!(RegretTrace::from_trials(vec![vec![0.0], vec![]]).is_err());
    }
}
