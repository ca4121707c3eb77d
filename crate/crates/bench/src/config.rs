use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Logistic loss with a ridge term and `||x||_inf <= 1`.
    LogregBox,
    /// Least squares with a ridge term and `x >= 0`.
    Nnls,
    /// `KL(Ax, b) + lambda ||x||_1` on `x >= 0` with the Shannon kernel.
    KlL1,
    /// `x^T Q x / 2 - c^T x` with `Q = A^T A / M + 2 mu I`.
    Quadratic,
    /// The scalar piecewise quadratic on which unguarded acceleration cycles.
    Counterexample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pga,
    AaPga,
    GuardedAaPga,
    Nesterov,
    Bpg,
    GuardedAaBpg,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pga,
        Method::AaPga,
        Method::GuardedAaPga,
        Method::Nesterov,
        Method::Bpg,
        Method::GuardedAaBpg,
    ];

    pub fn is_bregman(self) -> bool {
        matches!(self, Method::Bpg | Method::GuardedAaBpg)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pga => "pga",
            Method::AaPga => "aa_pga",
            Method::GuardedAaPga => "guarded_aa_pga",
            Method::Nesterov => "nesterov",
            Method::Bpg => "bpg",
            Method::GuardedAaBpg => "guarded_aa_bpg",
        }
    }
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::LogregBox,
        ProblemKind::Nnls,
        ProblemKind::KlL1,
        ProblemKind::Quadratic,
        ProblemKind::Counterexample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::LogregBox => "logreg_box",
            ProblemKind::Nnls => "nnls",
            ProblemKind::KlL1 => "kl_l1",
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Counterexample => "counterexample",
        }
    }

    pub fn is_bregman(self) -> bool {
        self == ProblemKind::KlL1
    }

    /// Methods that can solve this problem.
    pub fn methods(self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| m.is_bregman() == self.is_bregman())
            .collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown method '{s}'")))
    }
}

impl FromStr for ProblemKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown problem '{s}'")))
    }
}

/// Synthetic instance shape `(M, n)`, written `M,n` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims(pub usize, pub usize);

impl FromStr for Dims {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || BenchError::Config(format!("expected M,n for synthetic dimensions, got '{s}'"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let m = a.trim().parse().map_err(|_| bad())?;
        let n = b.trim().parse().map_err(|_| bad())?;
        Ok(Dims(m, n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub method: Method,
    /// Anderson memory.
    pub m: usize,
    /// Ridge weight of the logistic, least-squares and quadratic losses.
    pub mu: f64,
    /// `l1` weight of `kl_l1`.
    pub lambda: f64,
    pub gamma_override: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub data_path: Option<PathBuf>,
    pub csv_has_header: bool,
    pub synth_dims: Option<Dims>,
    /// Tikhonov scale of the coefficient problem.
    pub reg_scale: f64,
    /// Condition number of synthetic `logreg_box` data.
    pub condition: f64,
    /// Starting point of the `counterexample` problem.
    pub x0: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Nnls,
            method: Method::GuardedAaPga,
            m: 5,
            mu: 0.0,
            lambda: 0.001,
            gamma_override: None,
            max_iters: 1000,
            tol: 1e-10,
            seed: 42,
            data_path: None,
            csv_has_header: false,
            synth_dims: None,
            reg_scale: aaprox::anderson::DEFAULT_REG_SCALE,
            condition: 1e5,
            x0: 2.1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(BenchError::Config(msg));
        if self.problem.is_bregman() != self.method.is_bregman() {
            return if self.problem.is_bregman() {
                fail(format!(
                    "{} requires a Bregman method (bpg or guarded_aa_bpg)",
                    self.problem
                ))
            } else {
                fail(format!("{} is only available for kl_l1", self.method))
            };
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return fail(format!("mu must be a nonnegative number, got {}", self.mu));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return fail(format!(
                "lambda must be a nonnegative number, got {}",
                self.lambda
            ));
        }
        if let Some(g) = self.gamma_override {
            if !(g > 0.0) || !g.is_finite() {
                return fail(format!("gamma must be positive, got {g}"));
            }
        }
        if !(self.tol >= 0.0) {
            return fail(format!("tol must be nonnegative, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return fail("max_iters must be positive".into());
        }
        if !(self.reg_scale >= 0.0) || !self.reg_scale.is_finite() {
            return fail(format!(
                "reg_scale must be nonnegative, got {}",
                self.reg_scale
            ));
        }
        if !(self.condition >= 1.0) || !self.condition.is_finite() {
            return fail(format!(
                "condition must be at least 1, got {}",
                self.condition
            ));
        }
        if let Some(Dims(m, n)) = self.synth_dims {
            if m == 0 || n == 0 {
                return fail(format!(
                    "synthetic dimensions must be positive, got {m},{n}"
                ));
            }
        }
        if self.problem == ProblemKind::Counterexample && self.data_path.is_some() {
            return fail("counterexample takes no data file".into());
        }
        Ok(())
    }

    pub fn aa_config(&self) -> aaprox::AaConfig {
        aaprox::AaConfig::new(self.m).with_reg_scale(self.reg_scale)
    }
}
