//! Exact dense linear algebra over rationals.
//!
//! Gaussian elimination with partial pivoting by magnitude of the exact
//! values. Everything is recomputed from scratch per call; instances here
//! are desk scale and correctness beats speed.

use num_traits::Zero;

use crate::num::{rat_abs, Rational};

/// Row-major square factorization usable for repeated solves against the
/// same matrix.
#[derive(Debug, Clone)]
pub struct Elimination {
    n: usize,
    /// Combined L\U factors after row pivoting.
    lu: Vec<Vec<Rational>>,
    /// Row permutation applied to the input.
    perm: Vec<usize>,
}

impl Elimination {
    /// Factors a square matrix. Returns `None` if it is singular.
    pub fn new(a: &[Vec<Rational>]) -> Option<Self> {
        let n = a.len();
        let mut lu: Vec<Vec<Rational>> = a.to_vec();
        for row in &lu {
            assert_eq!(row.len(), n, "matrix must be square");
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            // partial pivoting: largest absolute value in the column
            let mut best = col;
            let mut best_abs = rat_abs(&lu[col][col]);
            for row in col + 1..n {
                let abs = rat_abs(&lu[row][col]);
                if abs > best_abs {
                    best = row;
                    best_abs = abs;
                }
            }
            if best_abs.is_zero() {
                return None;
            }
            lu.swap(col, best);
            perm.swap(col, best);
            let pivot = lu[col][col].clone();
            for row in col + 1..n {
                if lu[row][col].is_zero() {
                    continue;
                }
                let factor = &lu[row][col] / &pivot;
                for k in col + 1..n {
                    let sub = &factor * &lu[col][k];
                    lu[row][k] -= sub;
                }
                lu[row][col] = factor;
            }
        }
        Some(Self { n, lu, perm })
    }

    /// Solves `A x = b` for the factored `A`.
    pub fn solve(&self, b: &[Rational]) -> Vec<Rational> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<Rational> = self.perm.iter().map(|&i| b[i].clone()).collect();
        for row in 1..self.n {
            for col in 0..row {
                if !self.lu[row][col].is_zero() {
                    let sub = &self.lu[row][col] * &y[col];
                    y[row] -= sub;
                }
            }
        }
        for row in (0..self.n).rev() {
            for col in row + 1..self.n {
                if !self.lu[row][col].is_zero() {
                    let sub = &self.lu[row][col] * &y[col];
                    y[row] -= sub;
                }
            }
            y[row] = &y[row] / &self.lu[row][row];
        }
        y
    }

    /// Solves `A^T x = b` for the factored `A`.
    pub fn solve_transposed(&self, b: &[Rational]) -> Vec<Rational> {
        // A = P^-1 L U  =>  A^T = U^T L^T P. Solve U^T z = b, L^T w = z,
        // then undo the permutation.
        assert_eq!(b.len(), self.n);
        let mut z = b.to_vec();
        for row in 0..self.n {
            for col in 0..row {
                if !self.lu[col][row].is_zero() {
                    let sub = &self.lu[col][row] * &z[col];
                    z[row] -= sub;
                }
            }
            z[row] = &z[row] / &self.lu[row][row];
        }
        for row in (0..self.n).rev() {
            for col in row + 1..self.n {
                if !self.lu[col][row].is_zero() {
                    let sub = &self.lu[col][row] * &z[col];
                    z[row] -= sub;
                }
            }
        }
        let mut x = vec![Rational::zero(); self.n];
        for (pos, &orig) in self.perm.iter().enumerate() {
            x[orig] = z[pos].clone();
        }
        x
    }
}

/// Solves a square system once. `None` if singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    Elimination::new(a).map(|e| e.solve(b))
}

/// Rank of an arbitrary rectangular matrix.
pub fn rank(a: &[Vec<Rational>]) -> usize {
    if a.is_empty() {
        return 0;
    }
    let rows = a.len();
    let cols = a[0].len();
    let mut m = a.to_vec();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(pivot_row) = (r..rows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, pivot_row);
        let pivot = m[r][col].clone();
        for row in r + 1..rows {
            if m[row][col].is_zero() {
                continue;
            }
            let factor = &m[row][col] / &pivot;
            for k in col..cols {
                let sub = &factor * &m[r][k];
                m[row][k] -= sub;
            }
        }
        r += 1;
    }
    r
}
