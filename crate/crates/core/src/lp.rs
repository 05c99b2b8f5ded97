//! Small dense linear programs solved by the two-phase tableau simplex
//! method with Bland's anti-cycling rule.
//!
//! Problems here have a handful of variables and at most a few hundred
//! constraints, so a dense tableau is both the simplest and the fastest
//! option.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Equal,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug)]
struct Constraint {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// `minimize cᵀx` subject to linear constraints. Variables are nonnegative
/// unless marked free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    free: Vec<bool>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            free: vec![false; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn minimize(mut self, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), self.num_vars());
        self.objective = objective;
        self
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n = self.num_vars();
        // Column layout: one column per nonnegative variable, two for each
        // free one (x = x⁺ − x⁻), then slacks, then artificials.
        let mut col_of = Vec::with_capacity(n);
        let mut structural = 0;
        for &f in &self.free {
            col_of.push(structural);
            structural += if f { 2 } else { 1 };
        }
        let m = self.constraints.len();
        let slack_count = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Equal)
            .count();

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut needs_artificial = Vec::with_capacity(m);
        let mut slack_col = Vec::with_capacity(m);
        let mut next_slack = structural;
        for c in &self.constraints {
            let mut row = vec![0.0; structural + slack_count];
            for (j, &a) in c.coeffs.iter().enumerate() {
                row[col_of[j]] = a;
                if self.free[j] {
                    row[col_of[j] + 1] = -a;
                }
            }
            let mut relation = c.relation;
            let mut b = c.rhs;
            if c.relation != Relation::Equal {
                row[next_slack] = if c.relation == Relation::LessEq { 1.0 } else { -1.0 };
                slack_col.push(Some(next_slack));
                next_slack += 1;
            } else {
                slack_col.push(None);
            }
            if b < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                relation = match relation {
                    Relation::LessEq => Relation::GreaterEq,
                    Relation::GreaterEq => Relation::LessEq,
                    Relation::Equal => Relation::Equal,
                };
            }
            needs_artificial.push(relation != Relation::LessEq);
            rows.push(row);
            rhs.push(b);
        }

        let artificial_start = structural + slack_count;
        let artificial_count = needs_artificial.iter().filter(|&&a| a).count();
        let width = artificial_start + artificial_count;
        let mut tableau = Tableau {
            a: Vec::with_capacity(m),
            b: rhs,
            basis: Vec::with_capacity(m),
            width,
        };
        let mut next_art = artificial_start;
        for (i, mut row) in rows.into_iter().enumerate() {
            row.resize(width, 0.0);
            if needs_artificial[i] {
                row[next_art] = 1.0;
                tableau.basis.push(next_art);
                next_art += 1;
            } else {
                // Nonnegative rhs with a +1 slack: the slack starts basic.
                tableau.basis.push(slack_col[i].expect("inequality row has a slack"));
            }
            tableau.a.push(row);
        }

        let scale = 1.0 + tableau.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if artificial_count > 0 {
            let mut phase1 = vec![0.0; width];
            phase1[artificial_start..].iter_mut().for_each(|v| *v = 1.0);
            tableau.optimize(&phase1, width)?;
            let infeasibility = tableau.objective_value(&phase1);
            if infeasibility > 1e-9 * scale {
                return Err(LpError::Infeasible);
            }
            tableau.evict_artificials(artificial_start);
        }

        let mut cost = vec![0.0; width];
        for (j, &c) in self.objective.iter().enumerate() {
            cost[col_of[j]] = c;
            if self.free[j] {
                cost[col_of[j] + 1] = -c;
            }
        }
        tableau.optimize(&cost, artificial_start)?;

        let mut values = vec![0.0; width];
        for (r, &col) in tableau.basis.iter().enumerate() {
            values[col] = tableau.b[r];
        }
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let v = values[col_of[j]];
                if self.free[j] {
                    v - values[col_of[j] + 1]
                } else {
                    v
                }
            })
            .collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective })
    }
}

struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.b)
            .map(|(&j, &v)| cost[j] * v)
            .sum()
    }

    fn reduced_costs(&self, cost: &[f64], limit: usize) -> Vec<f64> {
        let mut r = cost[..limit].to_vec();
        for (row, &bj) in self.a.iter().zip(&self.basis) {
            let cb = cost[bj];
            if cb != 0.0 {
                for (rj, aj) in r.iter_mut().zip(row) {
                    *rj -= cb * aj;
                }
            }
        }
        r
    }

    /// Primal simplex on columns `0..limit` from the current feasible basis.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> Result<(), LpError> {
        for _ in 0..MAX_ITERATIONS {
            let reduced = self.reduced_costs(cost, limit);
            let Some(enter) = (0..limit).find(|&j| reduced[j] < -COST_EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.a.iter().enumerate() {
                let p = row[enter];
                if p > PIVOT_EPS {
                    let ratio = self.b[r] / p;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14
                                || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, enter);
        }
        Err(LpError::IterationLimit(MAX_ITERATIONS))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        self.b[row] /= p;
        let pivot_row = self.a[row].clone();
        let pivot_b = self.b[row];
        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let f = self.a[r][col];
            if f != 0.0 {
                for (v, pv) in self.a[r].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.b[r] -= f * pivot_b;
                if self.b[r] < 0.0 && self.b[r] > -1e-13 {
                    self.b[r] = 0.0;
                }
            }
        }
        self.basis[row] = col;
    }

    /// After a successful phase one every artificial still in the basis sits
    /// at zero. Pivot it out on any structural column, or drop the row when
    /// the constraint is redundant.
    fn evict_artificials(&mut self, artificial_start: usize) {
        let mut r = 0;
        while r < self.a.len() {
            if self.basis[r] >= artificial_start {
                let col = (0..artificial_start).find(|&j| self.a[r][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        self.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        self.a.remove(r);
                        self.b.remove(r);
                        self.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        debug_assert!(self.a.iter().all(|row| row.len() == self.width));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(2).minimize(vec![-3.0, -5.0]);
        lp.add_constraint(vec![1.0, 0.0], Relation::LessEq, 4.0);
        lp.add_constraint(vec![0.0, 2.0], Relation::LessEq, 12.0);
        lp.add_constraint(vec![3.0, 2.0], Relation::LessEq, 18.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective + 36.0).abs() < 1e-10);
        assert!((sol.x[0] - 2.0).abs() < 1e-10 && (sol.x[1] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y, x free, y ≥ 0, x + y = 1, x ≥ −3 → objective 1
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 2.0]);
        lp.set_free(0);
        lp.add_constraint(vec![1.0, 1.0], Relation::Equal, 1.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::GreaterEq, -3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-10 && sol.x[1].abs() < 1e-10);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.set_free(0);
        lp.add_constraint(vec![1.0], Relation::GreaterEq, 1.0);
        lp.add_constraint(vec![1.0], Relation::LessEq, -1.0);
        assert_eq!(lp.solve(), Err(LpError::Infeasible));

        let mut lp = LinearProgram::new(1).minimize(vec![-1.0]);
        lp.add_constraint(vec![1.0], Relation::GreaterEq, 1.0);
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Equal, 2.0);
        lp.add_constraint(vec![2.0, 2.0], Relation::Equal, 4.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Several constraints active at the optimum origin.
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, -1.0], Relation::LessEq, 0.0);
        lp.add_constraint(vec![-1.0, 1.0], Relation::LessEq, 0.0);
        lp.add_constraint(vec![1.0, 1.0], Relation::GreaterEq, 0.0);
        let sol = lp.solve().unwrap();
        assert!(sol.objective.abs() < 1e-12);
    }
}
