//! Thin QR factorization of a sliding window of residual columns.
//!
//! Columns are stored oldest first. Appending a column costs one
//! re-orthogonalized Gram-Schmidt pass against the stored basis and removing
//! the oldest column costs a sweep of Givens rotations, so every update is
//! `O(p^2 + p n)` for `p` stored columns of length `n`.

use nalgebra::{DMatrix, DVector};

use super::Coefficients;
use crate::error::{Error, Result};

/// Relative size below which a new diagonal entry of the triangular factor
/// is treated as zero.
pub const RANK_TOL: f64 = 1e-14;

/// Work counters, used to check that updates never refactorize.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct QrStats {
    /// Length-`n` vector kernels executed (dot products, axpys, rotations).
    pub vector_ops: u64,
    /// Factorizations built from scratch.
    pub full_factorizations: u64,
    pub appends: u64,
    pub removals: u64,
}

#[derive(Debug, Clone)]
pub struct QrUpdater {
    dim: usize,
    capacity: usize,
    q: Vec<DVector<f64>>,
    r: DMatrix<f64>,
    stats: QrStats,
}

impl QrUpdater {
    pub fn new(dim: usize, capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            dim,
            capacity,
            q: Vec::with_capacity(capacity),
            r: DMatrix::zeros(capacity, capacity),
            stats: QrStats::default(),
        }
    }

    /// Factorizes `columns` (oldest first) from scratch.
    pub fn from_columns(dim: usize, capacity: usize, columns: &[DVector<f64>]) -> Result<Self> {
        let mut qr = Self::new(dim, capacity.max(columns.len()));
        for c in columns {
            qr.append(c)?;
        }
        qr.stats = QrStats {
            full_factorizations: 1,
            ..QrStats::default()
        };
        Ok(qr)
    }

    pub fn ncols(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.q.len() == self.capacity
    }

    pub fn stats(&self) -> QrStats {
        self.stats
    }

    pub fn clear(&mut self) {
        self.q.clear();
        self.r.fill(0.0);
    }

    /// Orthonormal factor, `n x p`.
    pub fn q(&self) -> DMatrix<f64> {
        if self.q.is_empty() {
            return DMatrix::zeros(self.dim, 0);
        }
        DMatrix::from_columns(&self.q)
    }

    /// Upper triangular factor, `p x p`.
    pub fn r(&self) -> DMatrix<f64> {
        let p = self.ncols();
        self.r.view((0, 0), (p, p)).into_owned()
    }

    fn frobenius_sq(&self) -> f64 {
        let p = self.ncols();
        self.r.view((0, 0), (p, p)).norm_squared()
    }

    /// Appends `column` as the newest column. If the window is full the
    /// oldest column is removed first.
    ///
    /// Returns [`Error::RankDeficient`] when the new diagonal entry falls
    /// below `RANK_TOL * ||R||_F`; the factorization is then left exactly as
    /// it was after the eviction.
    pub fn push(&mut self, column: &DVector<f64>) -> Result<()> {
        if self.is_full() {
            self.remove_oldest();
        }
        self.append(column)
    }

    fn append(&mut self, column: &DVector<f64>) -> Result<()> {
        assert_eq!(column.len(), self.dim, "column length mismatch");
        assert!(!self.is_full(), "append on a full window");
        let p = self.ncols();
        let mut w = column.clone();
        let mut coeffs = vec![0.0; p];
        // Classical Gram-Schmidt with one re-orthogonalization pass.
        for _ in 0..2 {
            for (j, qj) in self.q.iter().enumerate() {
                let h = qj.dot(&w);
                w.axpy(-h, qj, 1.0);
                coeffs[j] += h;
                self.stats.vector_ops += 2;
            }
        }
        let rho = w.norm();
        self.stats.vector_ops += 1;
        let fro = (self.frobenius_sq() + column.norm_squared()).sqrt();
        if !rho.is_finite() || rho <= RANK_TOL * fro || rho == 0.0 {
            return Err(Error::RankDeficient);
        }
        for (j, h) in coeffs.into_iter().enumerate() {
            self.r[(j, p)] = h;
        }
        self.r[(p, p)] = rho;
        w /= rho;
        self.q.push(w);
        self.stats.appends += 1;
        Ok(())
    }

    /// Deletes the oldest column and restores triangular form with Givens
    /// rotations.
    pub fn remove_oldest(&mut self) {
        let p = self.ncols();
        if p == 0 {
            return;
        }
        // Shift columns left; the result is upper Hessenberg.
        for j in 0..p - 1 {
            for i in 0..p {
                self.r[(i, j)] = self.r[(i, j + 1)];
            }
        }
        for i in 0..p {
            self.r[(i, p - 1)] = 0.0;
        }
        for i in 0..p - 1 {
            let a = self.r[(i, i)];
            let b = self.r[(i + 1, i)];
            let h = a.hypot(b);
            if h == 0.0 {
                continue;
            }
            let (c, s) = (a / h, b / h);
            for j in i..p - 1 {
                let x = self.r[(i, j)];
                let y = self.r[(i + 1, j)];
                self.r[(i, j)] = c * x + s * y;
                self.r[(i + 1, j)] = -s * x + c * y;
            }
            self.r[(i + 1, i)] = 0.0;
            let (left, right) = self.q.split_at_mut(i + 1);
            let qi = &mut left[i];
            let qn = &mut right[0];
            for (x, y) in qi.iter_mut().zip(qn.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = c * u + s * v;
                *y = -s * u + c * v;
            }
            self.stats.vector_ops += 1;
        }
        for j in 0..p {
            self.r[(p - 1, j)] = 0.0;
        }
        self.q.pop();
        self.stats.removals += 1;
    }

    /// Solves the sum-to-one constrained least-squares problem through the
    /// triangular factor. Coefficients come back newest first.
    pub fn coefficients(&self, reg_scale: f64) -> (Coefficients, bool) {
        let p = self.ncols();
        if p == 0 {
            return (Coefficients::fixed_point(1), true);
        }
        if p == 1 {
            return (Coefficients::fixed_point(1), false);
        }
        // With the newest weight eliminated through sum(alpha) = 1 this is a
        // least-squares problem in the remaining weights, solved on the
        // triangular factor (stacked with sqrt(lambda) I when regularized).
        let r = self.r();
        let lambda = reg_scale * self.frobenius_sq();
        let m = if lambda > 0.0 {
            let mut m = DMatrix::zeros(2 * p, p);
            m.view_mut((0, 0), (p, p)).copy_from(&r);
            m.view_mut((p, 0), (p, p)).fill_with_identity();
            m.view_mut((p, 0), (p, p)).scale_mut(lambda.sqrt());
            m
        } else {
            r
        };
        let c = m.column(p - 1).into_owned();
        let b = DMatrix::from_fn(m.nrows(), p - 1, |i, j| m[(i, j)] - c[i]);
        let svd = b.svd(true, true);
        let s_max = svd.singular_values.max();
        let s_min = svd.singular_values.min();
        if !(s_max > 0.0) || !s_max.is_finite() || s_min <= RANK_TOL * s_max {
            return (Coefficients::fixed_point(p), true);
        }
        let Ok(g) = svd.solve(&(-c), 0.0) else {
            return (Coefficients::fixed_point(p), true);
        };
        let mut z = DVector::zeros(p);
        z.rows_mut(0, p - 1).copy_from(&g);
        z[p - 1] = 1.0 - g.sum();
        if z.iter().any(|v| !v.is_finite()) {
            return (Coefficients::fixed_point(p), true);
        }
        let total = 1.0;
        // Internal order is oldest first.
        let alpha: Vec<f64> = z.iter().rev().map(|v| v / total).collect();
        (Coefficients::from_vec(alpha), false)
    }
}
