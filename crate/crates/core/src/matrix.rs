//! Dense row-major matrices over any [`Scalar`], with Gaussian elimination.
//!
//! Exact scalars pivot on the first nonzero entry; floats pivot on the largest
//! magnitude and treat tiny entries as zero.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("matrix is singular")]
    Singular,
    #[error("rows are linearly dependent (rank {rank} < {rows})")]
    DependentRows { rank: usize, rows: usize },
    #[error("ragged rows: row {row} has width {width}, expected {expected}")]
    Ragged { row: usize, width: usize, expected: usize },
}

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row vectors. An empty list gives a `0 x cols` matrix.
    pub fn from_rows(rows: Vec<Vec<S>>, cols: usize) -> Result<Self, MatrixError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::Ragged { row: i, width: r.len(), expected: cols });
            }
            data.extend(r);
        }
        Ok(Self { rows: n, cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * rhs.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[S]) -> Result<Vec<S>, MatrixError> {
        if v.len() != self.rows {
            return Err(MatrixError::DimensionMismatch {
                left: (1, v.len()),
                right: (self.rows, self.cols),
            });
        }
        let mut out = vec![S::zero(); self.cols];
        for (k, a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let b = self.get(k, j);
                if !b.is_zero() {
                    *o = o.clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, MatrixError> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(MatrixError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, k: &S) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    /// Selects the listed columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }

    /// Selects the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j).clone())
    }

    fn pivot_in(&self, col: usize, from: usize) -> Option<usize> {
        if S::EXACT {
            // sparsest candidate row, to limit fill-in
            (from..self.rows)
                .filter(|&r| !self.get(r, col).is_zero())
                .min_by_key(|&r| (col..self.cols).filter(|&j| !self.get(r, j).is_zero()).count())
        } else {
            (from..self.rows)
                .filter(|&r| !self.get(r, col).is_negligible())
                .max_by(|&a, &b| {
                    let (x, y) = (self.get(a, col).to_f64().abs(), self.get(b, col).to_f64().abs());
                    x.total_cmp(&y)
                })
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Reduced row echelon form; returns the pivot columns and the number of row swaps.
    fn reduce(&mut self, full: bool) -> (Vec<usize>, usize) {
        let mut pivots = Vec::new();
        let mut swaps = 0;
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = self.pivot_in(c, r) else { continue };
            if p != r {
                self.swap_rows(p, r);
                swaps += 1;
            }
            let inv = self.get(r, c).checked_inv().expect("pivot is nonzero");
            let start = if full { 0 } else { r + 1 };
            for i in start..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let factor = self.get(i, c).clone() * inv.clone();
                for j in c..self.cols {
                    let v = self.get(i, j).clone() - factor.clone() * self.get(r, j).clone();
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (pivots, swaps)
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce(false).0.len()
    }

    pub fn det(&self) -> Result<S, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (self.cols, self.rows),
            });
        }
        let mut m = self.clone();
        let (pivots, swaps) = m.reduce(false);
        if pivots.len() < self.rows {
            return Ok(S::zero());
        }
        let mut d = S::one();
        for i in 0..self.rows {
            d = d * m.get(i, i).clone();
        }
        Ok(if swaps % 2 == 1 { -d } else { d })
    }

    pub fn inverse(&self) -> Result<Self, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (self.cols, self.rows),
            });
        }
        let n = self.rows;
        let mut aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                S::one()
            } else {
                S::zero()
            }
        });
        let (pivots, _) = aug.reduce(true);
        if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
            return Err(MatrixError::Singular);
        }
        Ok(Self::from_fn(n, n, |i, j| {
            let inv = aug.get(i, i).checked_inv().expect("pivot is nonzero");
            aug.get(i, n + j).clone() * inv
        }))
    }

    /// `U` with `self * U = I`, for a matrix with linearly independent rows.
    ///
    /// Picks pivot columns, inverts the square submatrix they span and places
    /// its rows at the pivot positions; all other rows of `U` are zero.
    pub fn right_inverse(&self) -> Result<Self, MatrixError> {
        let (pivots, _) = self.clone().reduce(false);
        if pivots.len() < self.rows {
            return Err(MatrixError::DependentRows { rank: pivots.len(), rows: self.rows });
        }
        let inv = self.select_cols(&pivots).inverse()?;
        let mut u = Self::zeros(self.cols, self.rows);
        for (k, &c) in pivots.iter().enumerate() {
            for j in 0..self.rows {
                u.set(c, j, inv.get(k, j).clone());
            }
        }
        Ok(u)
    }
}

impl<S: fmt::Display> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "  ({})", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Distinct rows in first-occurrence order, and for each input row the index
/// of its distinct representative.
pub fn unique_rows<S: PartialEq + Clone>(rows: &[Vec<S>]) -> (Vec<Vec<S>>, Vec<usize>) {
    let mut uniq: Vec<Vec<S>> = Vec::new();
    let mut index = Vec::with_capacity(rows.len());
    for r in rows {
        match uniq.iter().position(|u| u == r) {
            Some(k) => index.push(k),
            None => {
                index.push(uniq.len());
                uniq.push(r.clone());
            }
        }
    }
    (uniq, index)
}
