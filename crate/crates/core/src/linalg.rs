//! Dense exact linear algebra over `Q`.
//!
//! Everything here is Gauss-Jordan elimination on small matrices. The
//! pivot order is explicit so that callers needing two different (but
//! equally valid) solutions of an underdetermined system can ask for them.

use num_traits::{One, Zero};

use crate::rational::Q;

/// Column preference for pivot selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotOrder {
    /// Pivot on the leftmost available column first.
    #[default]
    Forward,
    /// Pivot on the rightmost available column first.
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<Q>>,
}

/// Reduced row echelon form of a matrix, possibly with extra right-hand
/// columns carried along.
#[derive(Debug, Clone)]
pub struct Rref {
    /// Reduced rows (only the first `rank` are nonzero on the coefficient part).
    pub rows: Vec<Vec<Q>>,
    /// `pivots[r]` is the pivot column of reduced row `r`.
    pub pivots: Vec<usize>,
    pub cols: usize,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![vec![Q::zero(); cols]; rows] }
    }

    /// Builds a matrix from sparse columns `(row, value)`.
    pub fn from_sparse_columns(rows: usize, columns: &[Vec<(usize, Q)>]) -> Self {
        let mut m = Matrix::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col {
                m.data[*r][c] += v;
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix { rows: rows.len(), cols, data: rows }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r][c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.data[r][c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<Q> {
        self.data.iter().map(|row| row[c].clone()).collect()
    }

    pub fn mul_vec(&self, x: &[Q]) -> Vec<Q> {
        assert_eq!(x.len(), self.cols);
        self.data
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Q::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.rref_augmented(&[], PivotOrder::Forward).pivots.len()
    }

    /// Row-reduces `[self | extra...]`, choosing pivots only among the
    /// coefficient columns.
    pub fn rref_augmented(&self, extra: &[Vec<Q>], order: PivotOrder) -> Rref {
        let width = self.cols + extra.len();
        let mut rows: Vec<Vec<Q>> = (0..self.rows)
            .map(|r| {
                let mut row = self.data[r].clone();
                row.extend(extra.iter().map(|col| col[r].clone()));
                row
            })
            .collect();
        let col_order: Vec<usize> = match order {
            PivotOrder::Forward => (0..self.cols).collect(),
            PivotOrder::Reverse => (0..self.cols).rev().collect(),
        };
        let mut pivots = Vec::new();
        let mut next = 0;
        for &c in &col_order {
            if next == rows.len() {
                break;
            }
            let Some(p) = (next..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
                continue;
            };
            rows.swap(next, p);
            let inv = Q::one() / &rows[next][c];
            if !inv.is_one() {
                for v in rows[next].iter_mut() {
                    if !v.is_zero() {
                        *v *= &inv;
                    }
                }
            }
            let pivot_row = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r == next || row[c].is_zero() {
                    continue;
                }
                let f = row[c].clone();
                for k in 0..width {
                    if !pivot_row[k].is_zero() {
                        row[k] -= &f * &pivot_row[k];
                    }
                }
            }
            pivots.push(c);
            next += 1;
        }
        Rref { rows, pivots, cols: self.cols }
    }

    /// One solution of `self * x = rhs` with every free variable zero, or
    /// `None` when the system is inconsistent.
    pub fn solve(&self, rhs: &[Q], order: PivotOrder) -> Option<Vec<Q>> {
        self.solve_with_free(rhs, order, |_| Q::zero())
    }

    /// Like [`Matrix::solve`] but free variable `j` takes the value `free(j)`.
    pub fn solve_with_free(&self, rhs: &[Q], order: PivotOrder, mut free: impl FnMut(usize) -> Q) -> Option<Vec<Q>> {
        assert_eq!(rhs.len(), self.rows);
        let rref = self.rref_augmented(&[rhs.to_vec()], order);
        let rank = rref.pivots.len();
        if rref.rows[rank..].iter().any(|row| !row[self.cols].is_zero()) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        let mut is_pivot = vec![false; self.cols];
        for &p in &rref.pivots {
            is_pivot[p] = true;
        }
        for j in 0..self.cols {
            if !is_pivot[j] {
                x[j] = free(j);
            }
        }
        for (r, &p) in rref.pivots.iter().enumerate() {
            let row = &rref.rows[r];
            let mut v = row[self.cols].clone();
            for j in 0..self.cols {
                if !is_pivot[j] && !row[j].is_zero() && !x[j].is_zero() {
                    v -= &row[j] * &x[j];
                }
            }
            x[p] = v;
        }
        Some(x)
    }

    /// Basis of the right kernel, one vector per free column (in column
    /// order), each with a 1 in its free column.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let rref = self.rref_augmented(&[], PivotOrder::Forward);
        let mut is_pivot = vec![false; self.cols];
        for &p in &rref.pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&j| !is_pivot[j])
            .map(|j| {
                let mut v = vec![Q::zero(); self.cols];
                v[j] = Q::one();
                for (r, &p) in rref.pivots.iter().enumerate() {
                    v[p] = -rref.rows[r][j].clone();
                }
                v
            })
            .collect()
    }
}
