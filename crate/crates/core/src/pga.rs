//! Proximal gradient drivers for `min f(x) + h(x)`.
//!
//! All Anderson variants accelerate the auxiliary sequence
//! `y_{k+1} = x_k - gamma grad f(x_k)`, `x_{k+1} = prox_{gamma h}(y_{k+1})`,
//! i.e. the fixed-point iteration of `g(y) = prox(y) - gamma grad f(prox(y))`.
//! Extrapolating `y` instead of `x` keeps every primal iterate feasible.

use std::sync::Arc;
use std::time::Instant;

use crate::anderson::{AaConfig, AndersonEngine, GuardRule};
use crate::error::{check_dim, Error, Result};
use crate::loss::{Evaluated, SmoothLoss};
use crate::prox::Regularizer;
use crate::trace::{IterRecord, SolveReport, StepKind, Termination};
use crate::Vector;

/// `f + h` with smooth `f` and proximable `h`.
#[derive(Clone)]
pub struct CompositeProblem {
    f: Arc<dyn SmoothLoss>,
    h: Regularizer,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("CompositeProblem")
            .field("dim", &self.f.dim())
            .field("h", &self.h)
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(f: Arc<dyn SmoothLoss>, h: Regularizer) -> Result<Self> {
        h.validate()?;
        Ok(Self { f, h })
    }

    pub fn from_loss<F: SmoothLoss + 'static>(f: F, h: Regularizer) -> Result<Self> {
        Self::new(Arc::new(f), h)
    }

    pub fn f(&self) -> &dyn SmoothLoss {
        self.f.as_ref()
    }

    pub fn loss(&self) -> Arc<dyn SmoothLoss> {
        Arc::clone(&self.f)
    }

    pub fn h(&self) -> &Regularizer {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Smoothness constant of `f`; `1 / L` is the default step size.
    pub fn smoothness(&self) -> f64 {
        self.f.smoothness()
    }

    /// `f(x) + h(x)`.
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        Ok(self.f.value(x)? + self.h.value(x))
    }

    pub fn prox(&self, y: &Vector, gamma: f64) -> Vector {
        self.h.prox(y, gamma)
    }
}

/// `prox_{gamma h}(x - gamma grad f(x))`.
pub fn pga_step(problem: &CompositeProblem, x: &Vector, gamma: f64) -> Result<Vector> {
    check_gamma(gamma)?;
    let grad = problem.f().gradient(x)?;
    Ok(problem.prox(&(x - grad * gamma), gamma))
}

/// `prox_{gamma h}(y) - gamma grad f(prox_{gamma h}(y))`.
pub fn g_map(problem: &CompositeProblem, y: &Vector, gamma: f64) -> Result<Vector> {
    check_gamma(gamma)?;
    let x = problem.prox(y, gamma);
    let grad = problem.f().gradient(&x)?;
    Ok(x - grad * gamma)
}

/// Sufficient decrease test `f_test <= f_k - gamma / 2 * ||grad f(x_k)||^2`,
/// compared exactly.
pub fn descent_check(f_test: f64, f_k: f64, grad_norm_sq: f64, gamma: f64) -> bool {
    f_test <= f_k - 0.5 * gamma * grad_norm_sq
}

/// Upper model of the objective at the plain step `x_pga`:
/// `f(x_k) + <grad f(x_k), x_pga - x_k> + ||x_pga - x_k||^2 / (2 gamma) + h(x_pga)`.
pub fn composite_model(
    problem: &CompositeProblem,
    gamma: f64,
    x_k: &Vector,
    f_k: f64,
    grad_k: &Vector,
    x_pga: &Vector,
) -> f64 {
    let d = x_pga - x_k;
    f_k + grad_k.dot(&d) + d.norm_squared() / (2.0 * gamma) + problem.h().value(x_pga)
}

/// Candidate iterate handed to the guard.
#[derive(Debug, Clone, Copy)]
pub struct GuardInput<'a> {
    pub x_k: &'a Vector,
    pub f_k: f64,
    pub grad_k: &'a Vector,
    /// Plain proximal gradient step from `x_k`.
    pub x_pga: &'a Vector,
    pub x_test: &'a Vector,
    pub f_test: f64,
}

/// Acceptance test of the guarded driver.
///
/// With `h = 0`, or under [`GuardRule::Smooth`], this is [`descent_check`].
/// Under [`GuardRule::Composite`] with nonzero `h` the candidate must satisfy
/// `f(x_test) + h(x_test) <= composite_model(...)`; the plain step always
/// passes when `gamma <= 1 / L`.
pub fn guard_accepts(
    problem: &CompositeProblem,
    rule: GuardRule,
    gamma: f64,
    input: &GuardInput<'_>,
) -> bool {
    if problem.h().is_zero() || rule == GuardRule::Smooth {
        return descent_check(input.f_test, input.f_k, input.grad_k.norm_squared(), gamma);
    }
    let lhs = input.f_test + problem.h().value(input.x_test);
    lhs <= composite_model(
        problem,
        gamma,
        input.x_k,
        input.f_k,
        input.grad_k,
        input.x_pga,
    )
}

/// Data passed to a guard observer after every guarded decision.
#[derive(Debug, Clone, Copy)]
pub struct GuardEvent<'a> {
    pub k: usize,
    pub input: GuardInput<'a>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Plain,
    Accelerated,
    Guarded,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "step size must be positive, got {gamma}"
        )))
    }
}

fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct Run {
    start: Instant,
    trace: Vec<IterRecord>,
}

impl Run {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            trace: Vec::new(),
        }
    }

    fn record(&mut self, objective: f64, residual: f64, step_kind: StepKind) {
        self.trace.push(IterRecord {
            objective,
            residual,
            step_kind,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn drive(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    config: Option<&AaConfig>,
    mode: Mode,
    tol: f64,
    max_iters: usize,
    observer: &mut dyn FnMut(&GuardEvent<'_>),
) -> Result<SolveReport> {
    check_gamma(gamma)?;
    check_dim(problem.dim(), x0.len())?;
    let f = problem.f();
    let h = problem.h();
    let mut engine = match config {
        Some(c) => Some(AndersonEngine::new(*c, x0.len())?),
        None => None,
    };
    let rule = config.map_or(GuardRule::default(), |c| c.guard);
    let flush = config.is_some_and(|c| c.flush_on_fallback);

    let mut run = Run::new();
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut eval = f.evaluate(&x)?;
    let initial_objective = eval.value + h.value(&x);
    let mut termination = Termination::MaxIters;

    for k in 0..max_iters {
        let Ok(grad) = f.gradient_from(&x, &eval) else {
            termination = Termination::Degenerate;
            break;
        };
        let g = &x - &grad * gamma;
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

        let (y_next, x_next, eval_next, kind) = match (mode, engine.as_mut()) {
            (Mode::Plain, _) | (_, None) => {
                let x_next = problem.prox(&g, gamma);
                let e = f.evaluate(&x_next);
                (g, x_next, e, StepKind::Plain)
            }
            (Mode::Accelerated, Some(engine)) => {
                let (y_ext, _) = engine.step(g, r)?;
                let x_next = problem.prox(&y_ext, gamma);
                let e = f.evaluate(&x_next);
                let kind = if k == 0 {
                    StepKind::Plain
                } else {
                    StepKind::Aa
                };
                (y_ext, x_next, e, kind)
            }
            (Mode::Guarded, Some(engine)) => {
                let (y_ext, _) = engine.step(g.clone(), r)?;
                if k == 0 {
                    let x_next = problem.prox(&y_ext, gamma);
                    let e = f.evaluate(&x_next);
                    (y_ext, x_next, e, StepKind::Plain)
                } else {
                    let x_test = problem.prox(&y_ext, gamma);
                    let x_pga = problem.prox(&g, gamma);
                    let test_eval = f.evaluate(&x_test).ok().filter(|e| e.value.is_finite());
                    let accepted = match &test_eval {
                        Some(te) => {
                            let input = GuardInput {
                                x_k: &x,
                                f_k: eval.value,
                                grad_k: &grad,
                                x_pga: &x_pga,
                                x_test: &x_test,
                                f_test: te.value,
                            };
                            let accepted = guard_accepts(problem, rule, gamma, &input);
                            observer(&GuardEvent { k, input, accepted });
                            accepted
                        }
                        None => false,
                    };
                    match (accepted, test_eval) {
                        (true, Some(te)) => (y_ext, x_test, Ok(te), StepKind::Aa),
                        _ => {
                            if flush {
                                engine.reset();
                            }
                            let e = f.evaluate(&x_pga);
                            (g, x_pga, e, StepKind::Fallback)
                        }
                    }
                }
            }
        };

        let next_eval: Evaluated = match eval_next {
            Ok(e) if e.value.is_finite() && all_finite(&x_next) => e,
            _ => {
                termination = Termination::Degenerate;
                break;
            }
        };
        y = y_next;
        x = x_next;
        eval = next_eval;
        run.record(eval.value + h.value(&x), rn, kind);
    }

    Ok(SolveReport {
        x,
        y,
        initial_objective,
        trace: run.trace,
        termination,
    })
}

/// Plain proximal gradient descent from `x0`.
pub fn run_pga(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    drive(
        problem,
        x0,
        gamma,
        None,
        Mode::Plain,
        tol,
        max_iters,
        &mut |_| {},
    )
}

/// Anderson-accelerated proximal gradient without safeguard.
pub fn run_aa_pga(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    drive(
        problem,
        x0,
        gamma,
        Some(config),
        Mode::Accelerated,
        tol,
        max_iters,
        &mut |_| {},
    )
}

/// Anderson-accelerated proximal gradient that accepts an extrapolated step
/// only when it passes [`guard_accepts`], and otherwise takes the plain step.
pub fn run_guarded_aa_pga(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    drive(
        problem,
        x0,
        gamma,
        Some(config),
        Mode::Guarded,
        tol,
        max_iters,
        &mut |_| {},
    )
}

/// [`run_guarded_aa_pga`] reporting every guard decision to `observer`.
pub fn run_guarded_aa_pga_observed(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    config: &AaConfig,
    tol: f64,
    max_iters: usize,
    observer: &mut dyn FnMut(&GuardEvent<'_>),
) -> Result<SolveReport> {
    drive(
        problem,
        x0,
        gamma,
        Some(config),
        Mode::Guarded,
        tol,
        max_iters,
        observer,
    )
}

/// Accelerated proximal gradient with momentum `beta_k = (k - 1) / (k + 2)`.
pub fn run_nesterov_pga(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    nesterov(problem, x0, gamma, tol, max_iters, true)
}

/// [`run_nesterov_pga`] with the momentum switched off, which reproduces
/// [`run_pga`].
pub fn run_nesterov_pga_without_momentum(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SolveReport> {
    nesterov(problem, x0, gamma, tol, max_iters, false)
}

fn nesterov(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    tol: f64,
    max_iters: usize,
    momentum: bool,
) -> Result<SolveReport> {
    check_gamma(gamma)?;
    check_dim(problem.dim(), x0.len())?;
    let f = problem.f();
    let h = problem.h();
    let mut run = Run::new();
    let initial_objective = problem.objective(x0)?;
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut termination = Termination::MaxIters;

    for k in 1..=max_iters {
        let beta = if momentum {
            (k as f64 - 1.0) / (k as f64 + 2.0)
        } else {
            0.0
        };
        y = &x + (&x - &x_prev) * beta;
        let step = f
            .gradient(&y)
            .map(|grad| problem.prox(&(&y - grad * gamma), gamma));
        let x_next = match step {
            Ok(v) if all_finite(&v) => v,
            _ => {
                termination = Termination::Degenerate;
                break;
            }
        };
        let rn = (&x_next - &y).norm();
        if rn <= tol * x_next.norm().max(1.0) {
            termination = Termination::Tolerance;
            break;
        }
        let objective = match f.value(&x_next) {
            Ok(v) if v.is_finite() => v + h.value(&x_next),
            _ => {
                termination = Termination::Degenerate;
                break;
            }
        };
        x_prev = std::mem::replace(&mut x, x_next);
        run.record(objective, rn, StepKind::Plain);
    }

    Ok(SolveReport {
        x,
        y,
        initial_objective,
        trace: run.trace,
        termination,
    })
}
