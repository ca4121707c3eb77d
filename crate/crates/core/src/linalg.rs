//! Data matrices (dense or compressed sparse rows) and spectral-norm
//! estimation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays. Column indices must be strictly
    /// increasing within each row.
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 {
            return Err(Error::InvalidArgument(
                "indptr must have nrows + 1 entries starting at 0".into(),
            ));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(Error::InvalidArgument(
                "indices and values disagree with indptr".into(),
            ));
        }
        for row in 0..nrows {
            let (lo, hi) = (indptr[row], indptr[row + 1]);
            if lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "indptr decreases at row {row}"
                )));
            }
            let cols = &indices[lo..hi];
            if cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidArgument(format!(
                    "column index out of range in row {row}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "column indices not increasing in row {row}"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for &(c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self::new(rows.len(), ncols, indptr, indices, values)
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = (0..a.nrows())
            .map(|i| {
                (0..a.ncols())
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (j, a[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(a.ncols(), &rows).expect("dense conversion is always valid")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzeros of one row as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    fn row_dot(&self, i: usize, x: &Vector) -> f64 {
        self.row(i).map(|(j, v)| v * x[j]).sum()
    }
}

/// Matrix of samples by features.
#[derive(Debug, Clone, PartialEq)]
pub enum DataMatrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl From<DMatrix<f64>> for DataMatrix {
    fn from(a: DMatrix<f64>) -> Self {
        DataMatrix::Dense(a)
    }
}

impl From<CsrMatrix> for DataMatrix {
    fn from(a: CsrMatrix) -> Self {
        DataMatrix::Sparse(a)
    }
}

impl DataMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            DataMatrix::Dense(a) => a.nrows(),
            DataMatrix::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            DataMatrix::Dense(a) => a.ncols(),
            DataMatrix::Sparse(a) => a.ncols(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            DataMatrix::Dense(a) => a.clone(),
            DataMatrix::Sparse(a) => a.to_dense(),
        }
    }

    /// `A x`. Sparse rows are evaluated in parallel when the current rayon
    /// pool has more than one thread; each entry is an independent dot
    /// product, so the result does not depend on the thread count.
    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.ncols(), x.len())?;
        Ok(match self {
            DataMatrix::Dense(a) => a * x,
            DataMatrix::Sparse(a) => {
                let out: Vec<f64> = if rayon::current_num_threads() > 1 {
                    (0..a.nrows())
                        .into_par_iter()
                        .map(|i| a.row_dot(i, x))
                        .collect()
                } else {
                    (0..a.nrows()).map(|i| a.row_dot(i, x)).collect()
                };
                DVector::from_vec(out)
            }
        })
    }

    /// `A^T v`.
    pub fn tr_mul_vec(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.nrows(), v.len())?;
        Ok(match self {
            DataMatrix::Dense(a) => a.tr_mul(v),
            DataMatrix::Sparse(a) => {
                let mut out = DVector::zeros(a.ncols());
                for i in 0..a.nrows() {
                    let vi = v[i];
                    if vi != 0.0 {
                        for (j, aij) in a.row(i) {
                            out[j] += aij * vi;
                        }
                    }
                }
                out
            }
        })
    }

    pub fn row_l1_norms(&self) -> Vec<f64> {
        match self {
            DataMatrix::Dense(a) => a.row_iter().map(|r| r.abs().sum()).collect(),
            DataMatrix::Sparse(a) => (0..a.nrows())
                .map(|i| a.row(i).map(|(_, v)| v.abs()).sum())
                .collect(),
        }
    }

    pub fn col_l1_norms(&self) -> Vec<f64> {
        match self {
            DataMatrix::Dense(a) => a.column_iter().map(|c| c.abs().sum()).collect(),
            DataMatrix::Sparse(a) => {
                let mut out = vec![0.0; a.ncols()];
                for i in 0..a.nrows() {
                    for (j, v) in a.row(i) {
                        out[j] += v.abs();
                    }
                }
                out
            }
        }
    }

    /// Whether row `i` has any nonzero entry.
    pub fn row_is_nonzero(&self, i: usize) -> bool {
        match self {
            DataMatrix::Dense(a) => a.row(i).iter().any(|&v| v != 0.0),
            DataMatrix::Sparse(a) => a.row(i).any(|(_, v)| v != 0.0),
        }
    }

    pub fn iter_values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            DataMatrix::Dense(a) => Box::new(a.iter().copied()),
            DataMatrix::Sparse(a) => Box::new(a.values.iter().copied()),
        }
    }
}

/// Estimate of `||A||_2^2` from power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the relative change fell
    /// below the tolerance; `value` is then the best estimate.
    pub converged: bool,
}

pub const NORM_TOL: f64 = 1e-6;
pub const NORM_MAX_ITERS: usize = 500;
const NORM_SEED: u64 = 0x5eed_a11c;

/// `||A||_2^2` by power iteration on `A^T A` from a seeded random start.
pub fn operator_norm_sq(a: &DataMatrix) -> Result<NormEstimate> {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 || a.iter_values().all(|v| v == 0.0) {
        return Err(Error::InvalidArgument(
            "operator norm of a zero matrix".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.gen_range(0.5..1.5));
    v /= v.norm();
    let mut estimate = 0.0;
    for it in 1..=NORM_MAX_ITERS {
        let av = a.mul_vec(&v)?;
        let w = a.tr_mul_vec(&av)?;
        // Rayleigh quotient of A^T A at the unit vector v.
        let next = av.norm_squared();
        let wn = w.norm();
        if wn == 0.0 {
            // Start vector in the null space; restart from a fresh direction.
            v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            v /= v.norm();
            continue;
        }
        v = w / wn;
        if it > 1 && (next - estimate).abs() <= NORM_TOL * next {
            return Ok(NormEstimate {
                value: next.max(wn),
                iterations: it,
                converged: true,
            });
        }
        estimate = next;
    }
    Ok(NormEstimate {
        value: estimate,
        iterations: NORM_MAX_ITERS,
        converged: false,
    })
}
