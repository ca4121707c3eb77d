//! Experiment harness for the `aaprox` solvers: data ingestion, synthetic
//! instances, problem assembly and trace export.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assemble;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;

pub use config::{Dims, ExperimentConfig, Method, ProblemKind};
pub use error::{BenchError, Result};
