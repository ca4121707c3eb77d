//! Smooth losses with gradients and smoothness constants.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{operator_norm_sq, DataMatrix, NormEstimate};
use crate::Vector;

/// A loss value together with whatever intermediate product the gradient can
/// reuse (typically `A x`).
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub value: f64,
    pub cache: Option<Vector>,
}

impl Evaluated {
    pub fn plain(value: f64) -> Self {
        Self { value, cache: None }
    }
}

/// Differentiable part `f` of a composite objective.
pub trait SmoothLoss: Send + Sync {
    fn dim(&self) -> usize;

    /// `f(x)` plus a cache for [`SmoothLoss::gradient_from`].
    fn evaluate(&self, x: &Vector) -> Result<Evaluated>;

    /// `grad f(x)` given the result of `evaluate(x)` at the same point.
    fn gradient_from(&self, x: &Vector, eval: &Evaluated) -> Result<Vector>;

    /// Lipschitz constant of the gradient, or the relative smoothness
    /// constant for losses meant for a Bregman kernel.
    fn smoothness(&self) -> f64;

    fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        let e = self.evaluate(x)?;
        self.gradient_from(x, &e)
    }
}

fn cached<'a>(
    eval: &'a Evaluated,
    a: &DataMatrix,
    x: &Vector,
) -> Result<std::borrow::Cow<'a, Vector>> {
    match &eval.cache {
        Some(ax) if ax.len() == a.nrows() => Ok(std::borrow::Cow::Borrowed(ax)),
        _ => Ok(std::borrow::Cow::Owned(a.mul_vec(x)?)),
    }
}

/// `log(1 + exp(-z))` without overflow.
fn log1p_exp_neg(z: f64) -> f64 {
    (-z.abs()).exp().ln_1p() + (-z).max(0.0)
}

/// `1 / (1 + exp(z))` without overflow.
fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `(1/M) sum_i log(1 + exp(-y_i a_i^T x)) + mu ||x||^2` with labels in
/// `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    a: DataMatrix,
    labels: Vector,
    mu: f64,
    norm: NormEstimate,
    ridge_in_smoothness: bool,
}

impl LogisticLoss {
    pub fn new(a: DataMatrix, labels: Vector, mu: f64) -> Result<Self> {
        check_dim(a.nrows(), labels.len())?;
        if let Some((i, y)) = labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y != 1.0 && y != -1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "label {y} at row {i} is not -1 or +1"
            )));
        }
        if !(mu >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mu must be nonnegative, got {mu}"
            )));
        }
        let norm = operator_norm_sq(&a)?;
        Ok(Self {
            a,
            labels,
            mu,
            norm,
            ridge_in_smoothness: false,
        })
    }

    /// Adds `2 mu` to the reported smoothness constant.
    pub fn include_ridge_in_l(mut self, include: bool) -> Self {
        self.ridge_in_smoothness = include;
        self
    }

    pub fn norm_estimate(&self) -> NormEstimate {
        self.norm
    }

    pub fn data(&self) -> &DataMatrix {
        &self.a
    }
}

impl SmoothLoss for LogisticLoss {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluated> {
        let ax = self.a.mul_vec(x)?;
        let m = self.a.nrows() as f64;
        let data: f64 = ax
            .iter()
            .zip(self.labels.iter())
            .map(|(&z, &y)| log1p_exp_neg(y * z))
            .sum();
        Ok(Evaluated {
            value: data / m + self.mu * x.norm_squared(),
            cache: Some(ax),
        })
    }

    fn gradient_from(&self, x: &Vector, eval: &Evaluated) -> Result<Vector> {
        let ax = cached(eval, &self.a, x)?;
        let m = self.a.nrows() as f64;
        let w = ax.zip_map(&self.labels, |z, y| -y * sigmoid_neg(y * z) / m);
        let mut g = self.a.tr_mul_vec(&w)?;
        g.axpy(2.0 * self.mu, x, 1.0);
        Ok(g)
    }

    fn smoothness(&self) -> f64 {
        let l = self.norm.value / (4.0 * self.a.nrows() as f64);
        if self.ridge_in_smoothness {
            l + 2.0 * self.mu
        } else {
            l
        }
    }
}

/// `(1/2M) ||A x - b||^2 + mu ||x||^2`.
#[derive(Debug, Clone)]
pub struct LeastSquaresLoss {
    a: DataMatrix,
    b: Vector,
    mu: f64,
    norm: NormEstimate,
    ridge_in_smoothness: bool,
}

impl LeastSquaresLoss {
    pub fn new(a: DataMatrix, b: Vector, mu: f64) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if !(mu >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mu must be nonnegative, got {mu}"
            )));
        }
        let norm = operator_norm_sq(&a)?;
        Ok(Self {
            a,
            b,
            mu,
            norm,
            ridge_in_smoothness: false,
        })
    }

    /// Adds `2 mu` to the reported smoothness constant.
    pub fn include_ridge_in_l(mut self, include: bool) -> Self {
        self.ridge_in_smoothness = include;
        self
    }

    pub fn norm_estimate(&self) -> NormEstimate {
        self.norm
    }

    pub fn data(&self) -> &DataMatrix {
        &self.a
    }
}

impl SmoothLoss for LeastSquaresLoss {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluated> {
        let ax = self.a.mul_vec(x)?;
        let m = self.a.nrows() as f64;
        let res = &ax - &self.b;
        Ok(Evaluated {
            value: res.norm_squared() / (2.0 * m) + self.mu * x.norm_squared(),
            cache: Some(ax),
        })
    }

    fn gradient_from(&self, x: &Vector, eval: &Evaluated) -> Result<Vector> {
        let ax = cached(eval, &self.a, x)?;
        let m = self.a.nrows() as f64;
        let res = (ax.as_ref() - &self.b) / m;
        let mut g = self.a.tr_mul_vec(&res)?;
        g.axpy(2.0 * self.mu, x, 1.0);
        Ok(g)
    }

    fn smoothness(&self) -> f64 {
        let l = self.norm.value / self.a.nrows() as f64;
        if self.ridge_in_smoothness {
            l + 2.0 * self.mu
        } else {
            l
        }
    }
}

/// Generalized Kullback-Leibler divergence
/// `sum_i (Ax)_i log((Ax)_i / b_i) - (Ax)_i + b_i`, with `0 log 0 = 0`.
///
/// The smoothness constant is relative to the Shannon entropy kernel: the
/// largest column sum of `A`.
#[derive(Debug, Clone)]
pub struct KlLoss {
    a: DataMatrix,
    b: Vector,
    nonzero_rows: Vec<bool>,
    relative_l: f64,
}

impl KlLoss {
    pub fn new(a: DataMatrix, b: Vector) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if a.iter_values().any(|v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "KL data matrix must be entrywise nonnegative".into(),
            ));
        }
        if b.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(
                "KL targets must be strictly positive".into(),
            ));
        }
        let nonzero_rows = (0..a.nrows()).map(|i| a.row_is_nonzero(i)).collect();
        let relative_l = a.col_l1_norms().into_iter().fold(0.0, f64::max);
        if relative_l == 0.0 {
            return Err(Error::InvalidArgument("KL data matrix is zero".into()));
        }
        Ok(Self {
            a,
            b,
            nonzero_rows,
            relative_l,
        })
    }

    pub fn data(&self) -> &DataMatrix {
        &self.a
    }

    fn check(&self, ax: &Vector) -> Result<()> {
        for (i, &v) in ax.iter().enumerate() {
            if !(v >= 0.0) || (v == 0.0 && self.nonzero_rows[i]) {
                return Err(Error::Domain(format!("(Ax)_{i} = {v} is not positive")));
            }
        }
        Ok(())
    }
}

impl SmoothLoss for KlLoss {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluated> {
        let ax = self.a.mul_vec(x)?;
        self.check(&ax)?;
        let value = ax
            .iter()
            .zip(self.b.iter())
            .map(|(&u, &b)| {
                let xlogx = if u == 0.0 { 0.0 } else { u * (u / b).ln() };
                xlogx - u + b
            })
            .sum();
        Ok(Evaluated {
            value,
            cache: Some(ax),
        })
    }

    fn gradient_from(&self, x: &Vector, eval: &Evaluated) -> Result<Vector> {
        let ax = cached(eval, &self.a, x)?;
        self.check(&ax)?;
        // Zero rows contribute nothing.
        let w = ax.zip_map(&self.b, |u, b| if u == 0.0 { 0.0 } else { (u / b).ln() });
        self.a.tr_mul_vec(&w)
    }

    fn smoothness(&self) -> f64 {
        self.relative_l
    }
}

/// `x^T Q x / 2 - b^T x` with symmetric positive semidefinite `Q`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    q: DMatrix<f64>,
    b: Vector,
    l: f64,
}

impl QuadraticLoss {
    pub fn new(q: DMatrix<f64>, b: Vector) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::InvalidArgument("Hessian must be square".into()));
        }
        check_dim(q.nrows(), b.len())?;
        let asym = (&q - q.transpose()).norm();
        if asym > 1e-12 * q.norm().max(1.0) {
            return Err(Error::InvalidArgument("Hessian must be symmetric".into()));
        }
        let l = q.clone().symmetric_eigenvalues().max().max(0.0);
        Ok(Self { q, b, l })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn linear_term(&self) -> &Vector {
        &self.b
    }
}

impl SmoothLoss for QuadraticLoss {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluated> {
        check_dim(self.dim(), x.len())?;
        let qx = &self.q * x;
        Ok(Evaluated {
            value: 0.5 * x.dot(&qx) - self.b.dot(x),
            cache: Some(qx),
        })
    }

    fn gradient_from(&self, x: &Vector, eval: &Evaluated) -> Result<Vector> {
        let qx = match &eval.cache {
            Some(qx) => qx.clone(),
            None => &self.q * x,
        };
        Ok(qx - &self.b)
    }

    fn smoothness(&self) -> f64 {
        self.l
    }
}

/// `c^T x`.
#[derive(Debug, Clone)]
pub struct LinearLoss {
    c: Vector,
}

impl LinearLoss {
    pub fn new(c: Vector) -> Self {
        Self { c }
    }
}

impl SmoothLoss for LinearLoss {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluated> {
        check_dim(self.dim(), x.len())?;
        Ok(Evaluated::plain(self.c.dot(x)))
    }

    fn gradient_from(&self, _x: &Vector, _eval: &Evaluated) -> Result<Vector> {
        Ok(self.c.clone())
    }

    fn smoothness(&self) -> f64 {
        0.0
    }
}
