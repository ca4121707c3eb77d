use std::path::PathBuf;

use aaprox::counterexample::run_counterexample;
use aaprox_bench::experiment::{counterexample_csv, run_comparison, run_experiment};
use aaprox_bench::{Dims, ExperimentConfig, Method, ProblemKind};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aaprox-bench",
    version,
    about = "Run and compare accelerated proximal gradient solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write trace.csv and summary.json.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several methods on the same instance.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated methods; defaults to every method that applies.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the accelerated iterates on the scalar counterexample as CSV.
    Counterexample {
        #[arg(long, default_value_t = 2.1)]
        x0: f64,
        /// Full periods of the limit cycle to run past the transient.
        #[arg(long, default_value_t = 10)]
        cycles: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// LIBSVM file, or dense CSV (target first) when the name ends in .csv.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    csv_has_header: bool,
    /// Synthetic instance size as M,n.
    #[arg(long)]
    synth: Option<Dims>,
    #[arg(long)]
    reg_scale: Option<f64>,
    #[arg(long)]
    condition: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
}

impl ConfigArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.problem {
            c.problem = v;
            if self.method.is_none() && c.method.is_bregman() != v.is_bregman() {
                c.method = if v.is_bregman() {
                    Method::GuardedAaBpg
                } else {
                    Method::GuardedAaPga
                };
            }
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if self.gamma.is_some() {
            c.gamma_override = self.gamma;
        }
        if let Some(v) = self.max_iters {
            c.max_iters = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if self.data.is_some() {
            c.data_path = self.data;
        }
        if self.csv_has_header {
            c.csv_has_header = true;
        }
        if self.synth.is_some() {
            c.synth_dims = self.synth;
        }
        if let Some(v) = self.reg_scale {
            c.reg_scale = v;
        }
        if let Some(v) = self.condition {
            c.condition = v;
        }
        if let Some(v) = self.x0 {
            c.x0 = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, out } => {
            let config = config.resolve()?;
            let s = run_experiment(&config, &out).context("run failed")?;
            println!(
                "{} {}: objective {:.10e} after {} iterations ({}, {:.3}s)",
                s.problem, s.method, s.final_objective, s.iterations, s.termination, s.wall_time_s
            );
        }
        Command::Compare {
            config,
            methods,
            out,
        } => {
            let config = config.resolve()?;
            let methods = if methods.is_empty() {
                config.problem.methods()
            } else {
                methods
            };
            let s = run_comparison(&config, &methods, &out).context("comparison failed")?;
            for r in &s.runs {
                println!(
                    "{:>16}: subopt {:.3e} after {} iterations ({}, {:.3}s)",
                    r.method, r.final_subopt, r.iterations, r.termination, r.wall_time_s
                );
            }
        }
        Command::Counterexample { x0, cycles, out } => {
            let report = run_counterexample(x0, cycles)?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            if report.diverged() {
                eprintln!(
                    "warning: engine and closed form differ by {:.3e} (relative)",
                    report.max_divergence
                );
            }
            let csv = counterexample_csv(&report);
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}
