use std::sync::Arc;

use aaprox::bregman::{BregmanProblem, Kernel};
use aaprox::counterexample::{PiecewiseQuadratic, STEP};
use aaprox::loss::{KlLoss, LeastSquaresLoss, LogisticLoss, QuadraticLoss, SmoothLoss};
use aaprox::{CompositeProblem, Regularizer, Vector};
use nalgebra::DVector;

use crate::config::{Dims, ExperimentConfig, ProblemKind};
use crate::data::{self, Dataset};
use crate::error::{BenchError, Result};

/// A problem with its step size and starting point.
#[derive(Debug)]
pub enum Assembled {
    Composite {
        problem: CompositeProblem,
        gamma: f64,
        x0: Vector,
    },
    Bregman {
        problem: BregmanProblem,
        x0: Vector,
    },
}

impl Assembled {
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        Ok(match self {
            Assembled::Composite { problem, .. } => problem.objective(x)?,
            Assembled::Bregman { problem, .. } => problem.objective(x)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Assembled::Composite { gamma, .. } => *gamma,
            Assembled::Bregman { problem, .. } => problem.gamma(),
        }
    }

    pub fn x0(&self) -> &Vector {
        match self {
            Assembled::Composite { x0, .. } | Assembled::Bregman { x0, .. } => x0,
        }
    }
}

pub fn default_dims(problem: ProblemKind) -> Dims {
    match problem {
        ProblemKind::LogregBox | ProblemKind::Nnls => Dims(200, 100),
        ProblemKind::KlL1 | ProblemKind::Quadratic => Dims(100, 50),
        ProblemKind::Counterexample => Dims(1, 1),
    }
}

/// Seeded synthetic data for the configured problem.
pub fn synthesize(config: &ExperimentConfig) -> Dataset {
    let Dims(m, n) = config
        .synth_dims
        .unwrap_or_else(|| default_dims(config.problem));
    match config.problem {
        ProblemKind::LogregBox => {
            data::generate_logreg_instance(m, n, config.condition, config.seed)
        }
        ProblemKind::Nnls => data::generate_nnls_instance(m, n, config.seed),
        ProblemKind::KlL1 => data::generate_kl_instance(m, n, config.seed),
        ProblemKind::Quadratic | ProblemKind::Counterexample => {
            data::generate_quadratic_instance(m, n, config.seed)
        }
    }
}

/// Data from `data_path`, or synthetic data when none is given.
pub fn load_data(config: &ExperimentConfig) -> Result<Dataset> {
    match &config.data_path {
        Some(path) => data::load(path, config.csv_has_header),
        None => Ok(synthesize(config)),
    }
}

fn composite(
    f: impl SmoothLoss + 'static,
    h: Regularizer,
    config: &ExperimentConfig,
    x0: Vector,
) -> Result<Assembled> {
    let problem = CompositeProblem::from_loss(f, h)?;
    let gamma = match config.gamma_override {
        Some(g) => g,
        None => step_from(problem.smoothness())?,
    };
    Ok(Assembled::Composite { problem, gamma, x0 })
}

fn step_from(l: f64) -> Result<f64> {
    if l > 0.0 && l.is_finite() {
        Ok(1.0 / l)
    } else {
        Err(BenchError::Config(format!(
            "smoothness constant {l} gives no step size; set gamma_override"
        )))
    }
}

/// Builds the problem with `gamma = 1 / L` (unless overridden), `x0 = 0` for
/// Euclidean problems and `x0 = 1` for `kl_l1`.
pub fn assemble_problem(config: &ExperimentConfig, data: &Dataset) -> Result<Assembled> {
    config.validate()?;
    let n = data.ncols();
    match config.problem {
        ProblemKind::LogregBox => {
            let f = LogisticLoss::new(data.a.clone(), data.y.clone(), config.mu)?;
            composite(
                f,
                Regularizer::Box { lo: -1.0, hi: 1.0 },
                config,
                DVector::zeros(n),
            )
        }
        ProblemKind::Nnls => {
            let f = LeastSquaresLoss::new(data.a.clone(), data.y.clone(), config.mu)?;
            composite(f, Regularizer::NonNeg, config, DVector::zeros(n))
        }
        ProblemKind::Quadratic => {
            let a = data.a.to_dense();
            let m = a.nrows() as f64;
            let mut q = a.transpose() * &a / m;
            for i in 0..n {
                q[(i, i)] += 2.0 * config.mu;
            }
            let c = a.transpose() * &data.y / m;
            composite(
                QuadraticLoss::new(q, c)?,
                Regularizer::Zero,
                config,
                DVector::zeros(n),
            )
        }
        ProblemKind::Counterexample => {
            let gamma = config.gamma_override.unwrap_or(STEP);
            let problem = CompositeProblem::from_loss(PiecewiseQuadratic, Regularizer::Zero)?;
            Ok(Assembled::Composite {
                problem,
                gamma,
                x0: DVector::from_element(1, config.x0),
            })
        }
        ProblemKind::KlL1 => {
            let f: Arc<dyn SmoothLoss> = Arc::new(KlLoss::new(data.a.clone(), data.y.clone())?);
            let h = Regularizer::L1 {
                lambda: config.lambda,
            };
            let gamma = match config.gamma_override {
                Some(g) => g,
                None => step_from(f.smoothness())?,
            };
            let problem = BregmanProblem::new(f, h, Kernel::Shannon, gamma)?;
            Ok(Assembled::Bregman {
                problem,
                x0: DVector::from_element(n, 1.0),
            })
        }
    }
}
