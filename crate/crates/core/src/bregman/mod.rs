//! Bregman proximal gradient (BPG) and its guarded Anderson acceleration.
//!
//! One BPG step is a gradient step in the dual space of a Legendre kernel
//! `phi`:
//!
//! ```text
//! y_{k+1} = grad phi(x_k) - gamma grad f(x_k)
//! x_{k+1} = prox^phi_{gamma h}(grad phi*(y_{k+1}))
//! ```
//!
//! The accelerated driver extrapolates the unconstrained dual sequence `y_k`.

mod kernel;

use std::sync::Arc;
use std::time::Instant;

pub use kernel::{solve_depressed_cubic, Kernel, KernelDomain};

use crate::anderson::{AaConfig, AndersonEngine, GuardRule};
use crate::error::{check_dim, Error, Result};
use crate::loss::{Evaluated, SmoothLoss};
use crate::pga::{guard_accepts, CompositeProblem, GuardEvent, GuardInput};
use crate::prox::Regularizer;
use crate::trace::{IterRecord, SolveReport, StepKind, Termination};
use crate::Vector;

/// Whether [`bregman_prox`] has a closed form for the pair.
pub fn prox_supported(h: &Regularizer, kernel: &Kernel) -> bool {
    matches!(
        (h, kernel),
        (Regularizer::Zero, _)
            | (_, Kernel::Energy)
            | (Regularizer::L1 { .. }, Kernel::Shannon)
            | (Regularizer::Simplex, Kernel::Shannon)
            | (Regularizer::NonNeg, Kernel::Shannon)
    )
}

/// `argmin_x gamma h(x) + D_phi(x, u)`.
///
/// Closed forms: `h = 0` gives `u`; the energy kernel gives the Euclidean
/// prox; with the Shannon kernel, `lambda ||x||_1` gives `u exp(-gamma
/// lambda)`, the simplex indicator gives `u / sum(u)` and the nonnegativity
/// indicator gives `u`. Every other pair is rejected.
pub fn bregman_prox(h: &Regularizer, kernel: &Kernel, gamma: f64, u: &Vector) -> Result<Vector> {
    if !kernel.in_interior(u) {
        return Err(Error::Domain(format!(
            "prox center outside the interior of {kernel:?}"
        )));
    }
    match (h, kernel) {
        (Regularizer::Zero, _) => Ok(u.clone()),
        (_, Kernel::Energy) => Ok(h.prox(u, gamma)),
        (Regularizer::L1 { lambda }, Kernel::Shannon) => Ok(u * (-gamma * lambda).exp()),
        (Regularizer::Simplex, Kernel::Shannon) => Ok(u / u.sum()),
        (Regularizer::NonNeg, Kernel::Shannon) => Ok(u.clone()),
        _ => Err(Error::Unsupported(format!(
            "no closed-form Bregman prox for {h:?} with {kernel:?}"
        ))),
    }
}

/// `f + h` with a kernel and step size.
#[derive(Clone)]
pub struct BregmanProblem {
    f: Arc<dyn SmoothLoss>,
    h: Regularizer,
    kernel: Kernel,
    gamma: f64,
}

impl std::fmt::Debug for BregmanProblem {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("BregmanProblem")
            .field("dim", &self.f.dim())
            .field("h", &self.h)
            .field("kernel", &self.kernel)
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl BregmanProblem {
    pub fn new(f: Arc<dyn SmoothLoss>, h: Regularizer, kernel: Kernel, gamma: f64) -> Result<Self> {
        h.validate()?;
        kernel.validate()?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {gamma}"
            )));
        }
        if !prox_supported(&h, &kernel) {
            return Err(Error::Unsupported(format!(
                "no closed-form Bregman prox for {h:?} with {kernel:?}"
            )));
        }
        Ok(Self {
            f,
            h,
            kernel,
            gamma,
        })
    }

    /// Uses `gamma = 1 / L` with the loss's (relative) smoothness constant.
    pub fn with_default_step(
        f: Arc<dyn SmoothLoss>,
        h: Regularizer,
        kernel: Kernel,
    ) -> Result<Self> {
        let l = f.smoothness();
        Self::new(f, h, kernel, 1.0 / l)
    }

    pub fn f(&self) -> &dyn SmoothLoss {
        self.f.as_ref()
    }

    pub fn h(&self) -> &Regularizer {
        &self.h
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn objective(&self, x: &Vector) -> Result<f64> {
        Ok(self.f.value(x)? + self.h.value(x))
    }

    /// `prox^phi_{gamma h}(grad phi*(y))`.
    pub fn primal(&self, y: &Vector) -> Result<Vector> {
        let u = self.kernel.conj_grad(y)?;
        bregman_prox(&self.h, &self.kernel, self.gamma, &u)
    }

    /// `grad phi(x) - gamma grad f(x)`.
    pub fn dual_step(&self, x: &Vector, grad: &Vector) -> Result<Vector> {
        Ok(self.kernel.grad(x)? - grad * self.gamma)
    }

    fn euclidean(&self) -> CompositeProblem {
        CompositeProblem::new(Arc::clone(&self.f), self.h)
            .expect("regularizer validated on construction")
    }
}

/// One BPG step from `x`, returning `(y_next, x_next)`.
pub fn bpg_step(problem: &BregmanProblem, x: &Vector) -> Result<(Vector, Vector)> {
    let grad = problem.f().gradient(x)?;
    let y = problem.dual_step(x, &grad)?;
    let x_next = problem.primal(&y)?;
    Ok((y, x_next))
}

/// `f_test <= f_k + <grad_k, x_bpg - x_k> + D_phi(x_bpg, x_k) / gamma`,
/// compared exactly.
pub fn bregman_descent_check(
    f_test: f64,
    f_k: f64,
    grad_k: &Vector,
    x_bpg: &Vector,
    x_k: &Vector,
    gamma: f64,
    kernel: &Kernel,
) -> Result<bool> {
    Ok(f_test <= bregman_model(f_k, grad_k, x_bpg, x_k, gamma, kernel)?)
}

/// Right-hand side of [`bregman_descent_check`].
pub fn bregman_model(
    f_k: f64,
    grad_k: &Vector,
    x_bpg: &Vector,
    x_k: &Vector,
    gamma: f64,
    kernel: &Kernel,
) -> Result<f64> {
    let d = x_bpg - x_k;
    Ok(f_k + grad_k.dot(&d) + kernel.distance(x_bpg, x_k)? / gamma)
}

/// Acceptance test of the guarded Bregman driver.
///
/// Under [`GuardRule::Smooth`] (or with `h = 0`) this is
/// [`bregman_descent_check`]. Under [`GuardRule::Composite`] both sides gain
/// the regularizer: `h(x_test)` on the left and `h(x_bpg)` on the right. The
/// energy kernel delegates to the Euclidean guard so both drivers agree
/// exactly.
pub fn bregman_guard_accepts(
    problem: &BregmanProblem,
    rule: GuardRule,
    input: &GuardInput<'_>,
) -> bool {
    if problem.kernel == Kernel::Energy {
        return guard_accepts(&problem.euclidean(), rule, problem.gamma, input);
    }
    let Ok(model) = bregman_model(
        input.f_k,
        input.grad_k,
        input.x_pga,
        input.x_k,
        problem.gamma,
        &problem.kernel,
    ) else {
        return false;
    };
    if problem.h.is_zero() || rule == GuardRule::Smooth {
        input.f_test <= model
    } else {
        input.f_test + problem.h.value(input.x_test) <= model + problem.h.value(input.x_pga)
    }
}

fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn drive(
    problem: &BregmanProblem,
    x0: Vector,
    y0: Vector,
    config: Option<&AaConfig>,
    tol: f64,
    max_iters: usize,
    observer: &mut dyn FnMut(&GuardEvent<'_>),
) -> Result<SolveReport> {
    check_dim(problem.dim(), x0.len())?;
    check_dim(problem.dim(), y0.len())?;
    let f = problem.f();
    let h = problem.h();
    let kernel = problem.kernel();
    let mut engine = match config {
        Some(c) => {
            if !kernel.full_dual_domain() {
                return Err(Error::Config(format!(
                    "{kernel:?} has a restricted dual domain and cannot be accelerated"
                )));
            }
            Some(AndersonEngine::new(*c, x0.len())?)
        }
        None => None,
    };
    let rule = config.map_or(GuardRule::default(), |c| c.guard);
    let flush = config.is_some_and(|c| c.flush_on_fallback);

    let start = Instant::now();
    let mut trace = Vec::new();
    let mut x = x0;
    let mut y = y0;
    let mut eval = f.evaluate(&x)?;
    let initial_objective = eval.value + h.value(&x);
    let mut termination = Termination::MaxIters;

    for k in 0..max_iters {
        let step = f
            .gradient_from(&x, &eval)
            .and_then(|grad| problem.dual_step(&x, &grad).map(|g| (grad, g)));
        let Ok((grad, g)) = step else {
            termination = Termination::Degenerate;
            break;
        };
        let r = &g - &y;
        let rn = r.norm();
        if !rn.is_finite() || !all_finite(&g) {
            termination = Termination::Degenerate;
            break;
        }
        if rn <= tol * g.norm().max(1.0) {
            termination = Termination::Tolerance;
            break;
        }

        let plain = |g: Vector| -> (Vector, Result<(Vector, Evaluated)>) {
            let next = problem
                .primal(&g)
                .and_then(|x| f.evaluate(&x).map(|e| (x, e)));
            (g, next)
        };

        let (y_next, next, kind) = match engine.as_mut() {
            None => {
                let (y_next, next) = plain(g);
                (y_next, next, StepKind::Plain)
            }
            Some(engine) => {
                let (y_ext, _) = engine.step(g.clone(), r)?;
                if k == 0 {
                    let (y_next, next) = plain(y_ext);
                    (y_next, next, StepKind::Plain)
                } else {
                    let Ok(x_bpg) = problem.primal(&g) else {
                        termination = Termination::Degenerate;
                        break;
                    };
                    let candidate = problem
                        .primal(&y_ext)
                        .ok()
                        .filter(|xt| kernel.in_interior(xt) && all_finite(xt))
                        .and_then(|xt| match f.evaluate(&xt) {
                            Ok(e) if e.value.is_finite() => Some((xt, e)),
                            _ => None,
                        });
                    let accepted = match &candidate {
                        Some((x_test, te)) => {
                            let input = GuardInput {
                                x_k: &x,
                                f_k: eval.value,
                                grad_k: &grad,
                                x_pga: &x_bpg,
                                x_test,
                                f_test: te.value,
                            };
                            let accepted = bregman_guard_accepts(problem, rule, &input);
                            observer(&GuardEvent { k, input, accepted });
                            accepted
                        }
                        None => false,
                    };
                    match (accepted, candidate) {
                        (true, Some(c)) => (y_ext, Ok(c), StepKind::Aa),
                        _ => {
                            if flush {
                                engine.reset();
                            }
                            let next = f.evaluate(&x_bpg).map(|e| (x_bpg, e));
                            (g, next, StepKind::Fallback)
                        }
                    }
                }
            }
        };

        match next {
            Ok((x_next, e)) if e.value.is_finite() && all_finite(&x_next) => {
                y = y_next;
                x = x_next;
                eval = e;
            }
            _ => {
                termination = Termination::Degenerate;
                break;
            }
        }
        trace.push(IterRecord {
            objective: eval.value + h.value(&x),
            residual: rn,
            step_kind: kind,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
    }

    Ok(SolveReport {
        x,
        y,
        initial_objective,
        trace,
        termination,
    })
}

/// Plain BPG from the primal point `x0`.
pub fn run_bpg(
    problem: &BregmanProblem,
    x0: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    let y0 = problem.kernel().grad(x0)?;
    drive(problem, x0.clone(), y0, None, tol, max_iters, &mut |_| {})
}

/// Guarded AA-BPG from the dual point `y0`, with `x0 = prox^phi(grad phi*(y0))`.
pub fn run_guarded_aa_bpg(
    problem: &BregmanProblem,
    y0: &Vector,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    run_guarded_aa_bpg_observed(problem, y0, config, tol, max_iters, &mut |_| {})
}

/// [`run_guarded_aa_bpg`] reporting every guard decision to `observer`.
pub fn run_guarded_aa_bpg_observed(
    problem: &BregmanProblem,
    y0: &Vector,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
    observer: &mut dyn FnMut(&GuardEvent<'_>),
) -> Result<SolveReport> {
    if !problem.kernel().full_dual_domain() {
        return Err(Error::Config(format!(
            "{:?} has a restricted dual domain and cannot be accelerated",
            problem.kernel()
        )));
    }
    let x0 = problem.primal(y0)?;
    drive(
        problem,
        x0,
        y0.clone(),
        Some(config),
        tol,
        max_iters,
        observer,
    )
}

/// Guarded AA-BPG from the primal point `x0`, with `y0 = grad phi(x0)`.
pub fn run_guarded_aa_bpg_from_primal(
    problem: &BregmanProblem,
    x0: &Vector,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    run_guarded_aa_bpg_from_primal_observed(problem, x0, config, tol, max_iters, &mut |_| {})
}

/// [`run_guarded_aa_bpg_from_primal`] reporting every guard decision.
pub fn run_guarded_aa_bpg_from_primal_observed(
    problem: &BregmanProblem,
    x0: &Vector,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
    observer: &mut dyn FnMut(&GuardEvent<'_>),
) -> Result<SolveReport> {
    let y0 = problem.kernel().grad(x0)?;
    drive(
        problem,
        x0.clone(),
        y0,
        Some(config),
        tol,
        max_iters,
        observer,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LinearLoss;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn v(xs: &[f64]) -> Vector {
        DVector::from_vec(xs.to_vec())
    }

    #[test]
    fn prox_closed_forms() {
        let u = v(&[1.0, 2.0]);
        assert_eq!(
            bregman_prox(&Regularizer::Zero, &Kernel::Hellinger, 1.0, &v(&[0.1, 0.2])).unwrap(),
            v(&[0.1, 0.2])
        );
        let p = bregman_prox(&Regularizer::L1 { lambda: 0.1 }, &Kernel::Shannon, 1.0, &u).unwrap();
        let s = (-0.1f64).exp();
        assert_relative_eq!(p[0], s, epsilon = 1e-15);
        assert_relative_eq!(p[1], 2.0 * s, epsilon = 1e-15);
        let p = bregman_prox(
            &Regularizer::Simplex,
            &Kernel::Shannon,
            1.0,
            &v(&[1.0, 3.0]),
        )
        .unwrap();
        assert_eq!(p, v(&[0.25, 0.75]));
        assert!(matches!(
            bregman_prox(
                &Regularizer::Box { lo: 0.0, hi: 1.0 },
                &Kernel::Shannon,
                1.0,
                &u
            ),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn multiplicative_weights() {
        let c = v(&[1.0, -2.0, 0.5]);
        let p = BregmanProblem::new(
            Arc::new(LinearLoss::new(c.clone())),
            Regularizer::Zero,
            Kernel::Shannon,
            0.3,
        )
        .unwrap();
        let x = v(&[0.2, 1.0, 3.0]);
        let (_, next) = bpg_step(&p, &x).unwrap();
        for i in 0..3 {
            assert_relative_eq!(next[i], x[i] * (-0.3 * c[i]).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn burg_rejected_for_acceleration() {
        let p = BregmanProblem::new(
            Arc::new(LinearLoss::new(v(&[1.0]))),
            Regularizer::Zero,
            Kernel::Burg,
            0.1,
        )
        .unwrap();
        let err = run_guarded_aa_bpg(&p, &v(&[-1.0]), &AaConfig::new(2), 1e-8, 10).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(run_bpg(&p, &v(&[1.0]), 0.0, 3).is_ok());
    }

    #[test]
    fn unsupported_pair_fails_fast() {
        let f = Arc::new(LinearLoss::new(v(&[1.0])));
        assert!(matches!(
            BregmanProblem::new(f, Regularizer::L1 { lambda: 1.0 }, Kernel::Burg, 0.1),
            Err(Error::Unsupported(_))
        ));
    }
}
