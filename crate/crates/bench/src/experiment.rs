use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use aaprox::bregman::{run_bpg, run_guarded_aa_bpg_from_primal};
use aaprox::pga::{run_aa_pga, run_guarded_aa_pga, run_nesterov_pga, run_pga};
use aaprox::{SolveReport, StepKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemble::{assemble_problem, load_data, Assembled};
use crate::config::{ExperimentConfig, Method};
use crate::error::{io_err, BenchError, Result};

pub const TRACE_HEADER: &str = "iter,objective,subopt,residual,step_kind,elapsed_s";

/// Environment variable capping the worker threads of comparison runs.
pub const THREADS_ENV: &str = "AAPROX_THREADS";

/// Runs `method` on an assembled problem.
pub fn solve(
    problem: &Assembled,
    method: Method,
    config: &ExperimentConfig,
) -> Result<SolveReport> {
    let aa = config.aa_config();
    let (tol, iters) = (config.tol, config.max_iters);
    let report = match (problem, method) {
        (Assembled::Composite { problem, gamma, x0 }, m) if !m.is_bregman() => match m {
            Method::Pga => run_pga(problem, x0, *gamma, tol, iters)?,
            Method::AaPga => run_aa_pga(problem, x0, *gamma, &aa, tol, iters)?,
            Method::GuardedAaPga => run_guarded_aa_pga(problem, x0, *gamma, &aa, tol, iters)?,
            Method::Nesterov => run_nesterov_pga(problem, x0, *gamma, tol, iters)?,
            Method::Bpg | Method::GuardedAaBpg => unreachable!(),
        },
        (Assembled::Bregman { problem, x0 }, Method::Bpg) => run_bpg(problem, x0, tol, iters)?,
        (Assembled::Bregman { problem, x0 }, Method::GuardedAaBpg) => {
            run_guarded_aa_bpg_from_primal(problem, x0, &aa, tol, iters)?
        }
        (_, m) => {
            return Err(BenchError::Config(format!(
                "{m} does not apply to {}",
                config.problem
            )));
        }
    };
    Ok(report)
}

/// Smallest objective in a run, the initial point included.
pub fn best_objective(report: &SolveReport) -> f64 {
    report
        .trace
        .iter()
        .map(|t| t.objective)
        .fold(report.initial_objective, f64::min)
}

/// `trace.csv` contents. Row 0 is the starting point; row `k` holds the
/// objective at `x_k` and the fixed-point residual of the step that produced
/// it. Numbers carry 17 significant digits.
pub fn trace_csv(report: &SolveReport, best: f64) -> String {
    let mut out = String::with_capacity(64 * (report.trace.len() + 2));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let f0 = report.initial_objective;
    let _ = writeln!(
        out,
        "0,{:.16e},{:.16e},NaN,init,{:.16e}",
        f0,
        f0 - best,
        0.0
    );
    for (i, t) in report.trace.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            i + 1,
            t.objective,
            t.objective - best,
            t.residual,
            t.step_kind,
            t.elapsed_s
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCounts {
    pub plain: usize,
    pub aa: usize,
    pub fallback: usize,
}

impl StepCounts {
    pub fn of(report: &SolveReport) -> Self {
        Self {
            plain: report.count(StepKind::Plain),
            aa: report.count(StepKind::Aa),
            fallback: report.count(StepKind::Fallback),
        }
    }
}

/// Contents of `summary.json` for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub method: String,
    pub dims: [usize; 2],
    pub gamma: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub best_objective: f64,
    pub final_subopt: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub termination: String,
    pub steps: StepCounts,
    pub config: ExperimentConfig,
}

/// Contents of the top-level `summary.json` of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub best_objective: f64,
    pub runs: Vec<RunSummary>,
}

pub struct MethodRun {
    pub method: Method,
    pub report: SolveReport,
    pub wall_time_s: f64,
}

fn timed(problem: &Assembled, method: Method, config: &ExperimentConfig) -> Result<MethodRun> {
    let start = Instant::now();
    let report = solve(problem, method, config)?;
    Ok(MethodRun {
        method,
        report,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn summarize(
    run: &MethodRun,
    problem: &Assembled,
    config: &ExperimentConfig,
    dims: [usize; 2],
    best: f64,
) -> RunSummary {
    let r = &run.report;
    let mut echo = config.clone();
    echo.method = run.method;
    RunSummary {
        problem: config.problem.to_string(),
        method: run.method.to_string(),
        dims,
        gamma: problem.gamma(),
        initial_objective: r.initial_objective,
        final_objective: r.final_objective(),
        best_objective: best,
        final_subopt: r.final_objective() - best,
        iterations: r.iterations(),
        wall_time_s: run.wall_time_s,
        termination: r.termination.to_string(),
        steps: StepCounts::of(r),
        config: echo,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn write_run(dir: &Path, run: &MethodRun, summary: &RunSummary) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(
        &dir.join("trace.csv"),
        &trace_csv(&run.report, summary.best_objective),
    )?;
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(summary)?,
    )
}

fn prepare(config: &ExperimentConfig) -> Result<(Assembled, [usize; 2])> {
    config.validate()?;
    let data = load_data(config)?;
    let dims = [data.nrows(), data.ncols()];
    let problem = assemble_problem(config, &data)?;
    Ok((problem, dims))
}

/// Runs the configured method and writes `trace.csv` and `summary.json`
/// into `out`. Suboptimality is measured against the run's own best value.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let (problem, dims) = prepare(config)?;
    let run = timed(&problem, config.method, config)?;
    let best = best_objective(&run.report);
    let summary = summarize(&run, &problem, config, dims, best);
    write_run(out, &run, &summary)?;
    Ok(summary)
}

/// Worker count from [`THREADS_ENV`], default 1.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Runs every method on one instance, writing `out/<method>/trace.csv`,
/// `out/<method>/summary.json` and a combined `out/summary.json`.
/// Suboptimality is measured against the best value over all methods.
pub fn run_comparison(
    config: &ExperimentConfig,
    methods: &[Method],
    out: &Path,
) -> Result<ComparisonSummary> {
    if methods.is_empty() {
        return Err(BenchError::Config("no methods to compare".into()));
    }
    for &m in methods {
        ExperimentConfig {
            method: m,
            ..config.clone()
        }
        .validate()?;
    }
    let (problem, dims) = prepare(&ExperimentConfig {
        method: methods[0],
        ..config.clone()
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let runs: Vec<MethodRun> = pool.install(|| {
        methods
            .par_iter()
            .map(|&m| timed(&problem, m, config))
            .collect::<Result<Vec<_>>>()
    })?;
    let best = runs
        .iter()
        .map(|r| best_objective(&r.report))
        .fold(f64::INFINITY, f64::min);
    let mut summaries = Vec::with_capacity(runs.len());
    for run in &runs {
        let summary = summarize(run, &problem, config, dims, best);
        write_run(&out.join(run.method.as_str()), run, &summary)?;
        summaries.push(summary);
    }
    let combined = ComparisonSummary {
        best_objective: best,
        runs: summaries,
    };
    write_file(
        &out.join("summary.json"),
        &serde_json::to_string_pretty(&combined)?,
    )?;
    Ok(combined)
}

/// `k,x,closed_form` rows of the accelerated iterates on the scalar
/// counterexample.
pub fn counterexample_csv(report: &aaprox::counterexample::CycleReport) -> String {
    let mut out = String::from("k,x,closed_form\n");
    for (k, (x, c)) in report.iterates.iter().zip(&report.closed_form).enumerate() {
        let _ = writeln!(out, "{k},{x:.16e},{c:.16e}");
    }
    out
}
