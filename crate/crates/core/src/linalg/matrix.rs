//! Small dense row-major matrices and LU factorization with partial pivoting.
//!
//! Everything here is sized for the problems this crate deals with: a few
//! dozen rows, a handful of columns. No blocking, no BLAS.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::LinalgError;

/// Pivot magnitude at or below which a matrix is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Dense matrix stored row-major: `data[row * cols + col]`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `Aᵀ diag(w) A`, the weighted Gram matrix.
    pub fn weighted_gram(&self, weights: &[f64]) -> Matrix {
        debug_assert_eq!(weights.len(), self.rows);
        let d = self.cols;
        let mut g = Matrix::zeros(d, d);
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let r = self.row(i);
            for a in 0..d {
                let wa = w * r[a];
                for b in 0..d {
                    g.data[a * d + b] += wa * r[b];
                }
            }
        }
        g
    }

    /// Adds `s * x xᵀ` in place. Requires a square matrix of matching size.
    pub fn add_outer(&mut self, x: &[f64], s: f64) {
        let d = self.cols;
        debug_assert_eq!(self.rows, d);
        for a in 0..d {
            let xa = s * x[a];
            for b in 0..d {
                self.data[a * d + b] += xa * x[b];
            }
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)] += v;
        }
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Numerical rank by Gaussian elimination with complete pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut rank = 0;
        for _ in 0..m.min(n) {
            let mut best = (rank, rank, 0.0_f64);
            for i in rank..m {
                for j in rank..n {
                    let v = a[(i, j)].abs();
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
            if best.2 <= tol {
                break;
            }
            a.swap_rows(rank, best.0);
            a.swap_cols(rank, best.1);
            let p = a[(rank, rank)];
            for i in (rank + 1)..m {
                let f = a[(i, rank)] / p;
                if f != 0.0 {
                    for j in rank..n {
                        let v = a[(rank, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// LU factorization `P A = L U` of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Factors `a`, failing with `SingularDesign` when some pivot has
    /// magnitude at most [`PIVOT_TOLERANCE`].
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
        Self::with_tolerance(a, PIVOT_TOLERANCE)
    }

    pub fn with_tolerance(a: &Matrix, tol: f64) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: a.rows,
                found: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(LinalgError::SingularDesign);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn determinant(&self) -> f64 {
        (0..self.n).fold(self.sign, |acc, i| acc * self.lu[i * self.n + i])
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, x = Pᵀ w.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// Returns `true` when every pivot of the symmetric matrix `a` is at least
/// `-tol`, i.e. `a` is positive semidefinite up to roundoff. Uses symmetric
/// elimination with diagonal pivoting.
pub fn is_positive_semidefinite(a: &Matrix, tol: f64) -> bool {
    let n = a.rows();
    let mut m = a.clone();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        // Largest remaining diagonal entry.
        let (pos, &k) = active
            .iter()
            .enumerate()
            .max_by(|x, y| m[(*x.1, *x.1)].total_cmp(&m[(*y.1, *y.1)]))
            .expect("non-empty");
        let pivot = m[(k, k)];
        if pivot < -tol {
            return false;
        }
        active.swap_remove(pos);
        if pivot <= tol {
            // A zero pivot forces the rest of the row to vanish.
            if active.iter().any(|&j| m[(k, j)].abs() > tol.sqrt()) {
                return false;
            }
            continue;
        }
        for &i in &active {
            let f = m[(i, k)] / pivot;
            for &j in &active {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    true
}
