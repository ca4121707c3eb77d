//! Anderson acceleration for fixed-point iterations, proximal gradient
//! methods and Bregman proximal gradient methods.
//!
//! The crate is organized bottom-up:
//!
//! * [`anderson`]: the generic acceleration engine (residual window,
//!   constrained least-squares coefficients, incremental QR, safeguards).
//! * [`prox`] and [`loss`]: nonsmooth regularizers with their proximal
//!   operators, and smooth losses with gradients and smoothness constants.
//! * [`pga`]: plain, accelerated and guarded proximal gradient drivers plus a
//!   Nesterov baseline.
//! * [`bregman`]: Legendre kernels, Bregman distances and proximal maps, and
//!   the dual-space accelerated Bregman proximal gradient driver.
//! * [`counterexample`]: a strongly convex scalar function on which
//!   unguarded Anderson-accelerated gradient descent cycles forever.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anderson;
pub mod bregman;
pub mod counterexample;
pub mod error;
pub mod linalg;
pub mod loss;
pub mod pga;
pub mod prox;
pub mod trace;

/// Dense column vector used throughout.
pub type Vector = nalgebra::DVector<f64>;

pub use anderson::{AaConfig, AndersonEngine, Coefficients, GuardRule, ResidualHistory};
pub use error::{Error, Result};
pub use linalg::{operator_norm_sq, CsrMatrix, DataMatrix};
pub use loss::SmoothLoss;
pub use pga::CompositeProblem;
pub use prox::Regularizer;
pub use trace::{IterRecord, SolveReport, StepKind, Termination};
