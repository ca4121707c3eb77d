//! Nonsmooth terms `h` and their Euclidean proximal operators.

use crate::error::{Error, Result};
use crate::Vector;

/// `sign(y_i) * max(|y_i| - t, 0)` componentwise.
pub fn prox_l1(y: &Vector, t: f64) -> Vector {
    y.map(|v| v.signum() * (v.abs() - t).max(0.0))
}

/// Componentwise clamp to `[lo, hi]`.
pub fn project_box(y: &Vector, lo: f64, hi: f64) -> Vector {
    debug_assert!(lo <= hi);
    y.map(|v| v.clamp(lo, hi))
}

pub fn project_nonneg(y: &Vector) -> Vector {
    y.map(|v| v.max(0.0))
}

/// Euclidean projection onto `{x >= 0, sum(x) = 1}` by sorting.
pub fn project_simplex(y: &Vector) -> Vector {
    let mut u: Vec<f64> = y.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

/// The nonsmooth part of a composite objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `lambda * ||x||_1`
    L1 {
        lambda: f64,
    },
    /// Indicator of `[lo, hi]^n`.
    Box {
        lo: f64,
        hi: f64,
    },
    /// Indicator of the nonnegative orthant.
    NonNeg,
    /// Indicator of the probability simplex.
    Simplex,
}

const FEAS_TOL: f64 = 1e-12;

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::L1 { lambda } if !(lambda >= 0.0) => Err(Error::InvalidArgument(format!(
                "l1 weight must be nonnegative, got {lambda}"
            ))),
            Regularizer::Box { lo, hi } if !(lo <= hi) => Err(Error::InvalidArgument(format!(
                "box bounds out of order: [{lo}, {hi}]"
            ))),
            _ => Ok(()),
        }
    }

    /// `h(x)`, `+inf` outside the domain of an indicator.
    pub fn value(&self, x: &Vector) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * x.lp_norm(1),
            Regularizer::Box { lo, hi } => {
                if x.iter().all(|&v| v >= lo - FEAS_TOL && v <= hi + FEAS_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::NonNeg => {
                if x.iter().all(|&v| v >= -FEAS_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::Simplex => {
                if x.iter().all(|&v| v >= -FEAS_TOL) && (x.sum() - 1.0).abs() <= 1e-9 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.value(x).is_finite()
    }

    /// `prox_{gamma h}(y) = argmin_x h(x) + ||x - y||^2 / (2 gamma)`.
    pub fn prox(&self, y: &Vector, gamma: f64) -> Vector {
        debug_assert!(gamma > 0.0);
        match *self {
            Regularizer::Zero => y.clone(),
            Regularizer::L1 { lambda } => prox_l1(y, gamma * lambda),
            Regularizer::Box { lo, hi } => project_box(y, lo, hi),
            Regularizer::NonNeg => project_nonneg(y),
            Regularizer::Simplex => project_simplex(y),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Regularizer::Zero)
    }
}
