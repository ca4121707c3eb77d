//! A strongly convex, smooth scalar function on which Anderson-accelerated
//! gradient descent with `m = 1` and `gamma = 1 / L` never converges.
//!
//! `f'(x) = x/10 - 24.9` for `x < -1`, `25 x` on `[-1, 1)` and `x/10 + 24.9`
//! for `x >= 1`, so `f` is `1/10`-strongly convex and `25`-smooth. From
//! `x0` in `[2.01, 246.98]` the accelerated iterates settle on a 4-cycle
//! through `+-249` and `+-249 (sqrt 5 - 2)`.

use nalgebra::DVector;

use crate::anderson::{AaConfig, AndersonEngine, FixedPointMap, FnMap};
use crate::error::{check_dim, Result};
use crate::loss::{Evaluated, SmoothLoss};
use crate::pga::{run_guarded_aa_pga, CompositeProblem};
use crate::prox::Regularizer;
use crate::trace::SolveReport;
use crate::Vector;

pub const STRONG_CONVEXITY: f64 = 0.1;
pub const SMOOTHNESS: f64 = 25.0;
pub const STEP: f64 = 1.0 / SMOOTHNESS;
/// Starting points covered by the non-convergence result.
pub const START_RANGE: (f64, f64) = (2.01, 246.98);
/// Divergence between the engine and the closed-form recursion that is
/// flagged in a [`CycleReport`].
pub const AGREEMENT_TOL: f64 = 1e-8;

pub fn grad_f17(x: f64) -> f64 {
    if x < -1.0 {
        x / 10.0 - 24.9
    } else if x < 1.0 {
        25.0 * x
    } else {
        x / 10.0 + 24.9
    }
}

pub fn value_f17(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        12.5 * x * x
    } else {
        x * x / 20.0 + 24.9 * a - 12.45
    }
}

/// Outer points of the cycle, `+-249`.
pub const CYCLE_OUTER: f64 = 249.0;

/// Inner points of the cycle, `+-249 (sqrt 5 - 2)`.
pub fn cycle_inner() -> f64 {
    249.0 * (5f64.sqrt() - 2.0)
}

/// Map carrying `x_{4n+1}` to `x_{4n+5}` once the outer points are reached.
pub fn inner_map(y: f64) -> f64 {
    249.0 * (y + 249.0) / (y + 1245.0)
}

/// Derivative of [`inner_map`].
pub fn inner_map_derivative(y: f64) -> f64 {
    249.0 * 996.0 / ((y + 1245.0) * (y + 1245.0))
}

/// Closed-form accelerated step with `m = 1`:
/// `x_{k+1} = (f'(x_{k-1}) x_k - f'(x_k) x_{k-1}) / (f'(x_{k-1}) - f'(x_k))`.
///
/// Equal gradients make the coefficient problem singular; a plain gradient
/// step with `gamma` is returned instead.
pub fn aa_gd_m1_step(x_k: f64, x_km1: f64, gamma: f64) -> f64 {
    let a = grad_f17(x_k);
    let b = grad_f17(x_km1);
    if a == b {
        return x_k - gamma * a;
    }
    (b * x_k - a * x_km1) / (b - a)
}

/// The function as a one-dimensional [`SmoothLoss`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PiecewiseQuadratic;

impl SmoothLoss for PiecewiseQuadratic {
    fn dim(&self) -> usize {
        1
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluated> {
        check_dim(1, x.len())?;
        Ok(Evaluated::plain(value_f17(x[0])))
    }

    fn gradient_from(&self, x: &Vector, _eval: &Evaluated) -> Result<Vector> {
        check_dim(1, x.len())?;
        Ok(DVector::from_element(1, grad_f17(x[0])))
    }

    fn smoothness(&self) -> f64 {
        SMOOTHNESS
    }
}

/// Gradient descent map `x - gamma f'(x)` with `gamma = 1 / 25`.
pub fn gd_map() -> impl FixedPointMap {
    FnMap::new(1, |y: &Vector| {
        Ok(DVector::from_element(1, y[0] - STEP * grad_f17(y[0])))
    })
}

/// Accelerated iterates from the general engine next to the closed-form
/// recursion.
#[derive(Debug, Clone)]
pub struct CycleReport {
    pub x0: f64,
    /// `x_0, x_1, ...` from the Anderson engine.
    pub iterates: Vec<f64>,
    /// Same indices from [`aa_gd_m1_step`].
    pub closed_form: Vec<f64>,
    /// Largest `|engine - closed form| / max(1, |closed form|)`.
    pub max_divergence: f64,
    /// Last `x_{4n+3}, x_{4n+4}, x_{4n+5}, x_{4n+6}`.
    pub limits: [f64; 4],
    /// Set when `x0` lies outside [`START_RANGE`].
    pub warning: Option<String>,
}

impl CycleReport {
    pub fn diverged(&self) -> bool {
        self.max_divergence > AGREEMENT_TOL
    }
}

/// Runs unguarded accelerated gradient descent (`m = 1`, no regularization,
/// `gamma = 1 / 25`) for `n_cycles` full periods past the transient and
/// cross-checks every iterate against the closed form.
pub fn run_counterexample(x0: f64, n_cycles: usize) -> Result<CycleReport> {
    let warning = (!(START_RANGE.0..=START_RANGE.1).contains(&x0)).then(|| {
        format!(
            "x0 = {x0} lies outside [{}, {}]; the cycle is not guaranteed",
            START_RANGE.0, START_RANGE.1
        )
    });
    let last = 4 * n_cycles + 6;
    let map = gd_map();
    let config = AaConfig::new(1).with_reg_scale(0.0).with_qr(false);
    let mut engine = AndersonEngine::new(config, 1)?;
    let mut y = DVector::from_element(1, x0);
    let mut iterates = Vec::with_capacity(last + 1);
    iterates.push(x0);
    for _ in 0..last {
        let g = map.apply(&y)?;
        let r = &g - &y;
        let (next, _) = engine.step(g, r)?;
        y = next;
        iterates.push(y[0]);
    }

    let mut closed_form = Vec::with_capacity(last + 1);
    closed_form.push(x0);
    closed_form.push(x0 - STEP * grad_f17(x0));
    while closed_form.len() <= last {
        let k = closed_form.len() - 1;
        closed_form.push(aa_gd_m1_step(closed_form[k], closed_form[k - 1], STEP));
    }

    let max_divergence = iterates
        .iter()
        .zip(&closed_form)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let n = n_cycles;
    let limits = [
        iterates[4 * n + 3],
        iterates[4 * n + 4],
        iterates[4 * n + 5],
        iterates[4 * n + 6],
    ];
    Ok(CycleReport {
        x0,
        iterates,
        closed_form,
        max_divergence,
        limits,
        warning,
    })
}

/// Guarded accelerated gradient descent (`m = 1`, `gamma = 1 / 25`) on the
/// same function.
pub fn run_guarded_counterexample(x0: f64, tol: f64, max_iters: usize) -> Result<SolveReport> {
    let problem = CompositeProblem::from_loss(PiecewiseQuadratic, Regularizer::Zero)?;
    let config = AaConfig::new(1).with_reg_scale(0.0).with_qr(false);
    run_guarded_aa_pga(
        &problem,
        &DVector::from_element(1, x0),
        STEP,
        &config,
        tol,
        max_iters,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradient_examples() {
        assert_eq!(grad_f17(0.0), 0.0);
        assert_relative_eq!(grad_f17(1.0), 25.0, epsilon = 1e-12);
        assert_relative_eq!(grad_f17(1.0 - 1e-15), 25.0, epsilon = 1e-12);
        assert_relative_eq!(grad_f17(249.0), 49.8, epsilon = 1e-12);
        assert_relative_eq!(grad_f17(-1.0), -25.0, epsilon = 1e-12);
        assert_relative_eq!(grad_f17(-1.0 - 1e-15), -25.0, epsilon = 1e-12);
    }

    #[test]
    fn value_examples() {
        assert_eq!(value_f17(0.0), 0.0);
        assert_relative_eq!(value_f17(1.0), 12.5, epsilon = 1e-12);
        assert_relative_eq!(value_f17(1.0 + 1e-12), 12.5, epsilon = 1e-9);
        assert_relative_eq!(value_f17(-1.0 - 1e-12), 12.5, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_examples() {
        assert_relative_eq!(aa_gd_m1_step(3.0, 7.0, STEP), -249.0, epsilon = 1e-12);
        assert_relative_eq!(aa_gd_m1_step(-3.0, -100.0, STEP), 249.0, epsilon = 1e-12);
        let x3 = aa_gd_m1_step(-249.0, 2.1, STEP);
        assert_relative_eq!(
            x3,
            249.0 * (2.1 - 249.0) / (2.1 + 747.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(x3, -82.0693, epsilon = 1e-4);
    }

    #[test]
    fn equal_gradients_take_gradient_step() {
        assert_eq!(aa_gd_m1_step(0.5, 0.5, STEP), 0.5 - STEP * 12.5);
    }

    #[test]
    fn out_of_range_start_warns() {
        assert!(run_counterexample(1.5, 1).unwrap().warning.is_some());
        assert!(run_counterexample(2.1, 1).unwrap().warning.is_none());
    }
}
