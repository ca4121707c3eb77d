//! Per-iteration records and solver reports.

use std::fmt;

use crate::Vector;

/// How an iterate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// Unaccelerated step of the base method.
    Plain,
    /// Accepted extrapolated step.
    Aa,
    /// Extrapolated step rejected by the guard; the base step was taken.
    Fallback,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Plain => "plain",
            StepKind::Aa => "aa",
            StepKind::Fallback => "fallback",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One iteration `k -> k + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    /// Objective `f + h` at the new iterate.
    pub objective: f64,
    /// Norm of the fixed-point residual evaluated at the old iterate.
    pub residual: f64,
    pub step_kind: StepKind,
    /// Seconds since the solver started.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// The residual fell below the relative tolerance.
    Tolerance,
    MaxIters,
    /// A nonfinite value or a domain violation stopped the run.
    Degenerate,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIters => "max_iters",
            Termination::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final primal iterate.
    pub x: Vector,
    /// Final auxiliary iterate (`x = T(y)` for the driver's output map).
    pub y: Vector,
    /// Objective at the starting point.
    pub initial_objective: f64,
    pub trace: Vec<IterRecord>,
    pub termination: Termination,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.initial_objective, |r| r.objective)
    }

    /// Objective values `phi(x_0), phi(x_1), ...`.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective)
            .chain(self.trace.iter().map(|r| r.objective))
            .collect()
    }

    pub fn count(&self, kind: StepKind) -> usize {
        self.trace.iter().filter(|r| r.step_kind == kind).count()
    }
}
