use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dre_core::{solve_dre, BasisKind, BdfScheme, DreProblem, SolverConfig};
use log::info;
use serde::Serialize;

mod config;
mod output;

use config::{Overrides, RunConfig};
use output::{IndexRow, Summary};

const EXIT_ERROR: u8 = 1;
const EXIT_UNCONVERGED: u8 = 3;

/// Low-rank solver for large differential Riccati equations.
#[derive(Debug, Parser)]
#[command(name = "dre", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the configured problem and write factors and history.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Run both basis kinds and write `convergence.csv`.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Summarize one or more result directories written by `solve`.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run file with [problem], [solver] and [output] sections.
    #[arg(long)]
    config: PathBuf,
    /// Backward-error tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Steps of the reduction-phase integrator.
    #[arg(long)]
    timesteps: Option<usize>,
    #[arg(long, value_enum)]
    refine: Option<Refine>,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    real_shifts_only: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Rksm,
    Eksm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Refine {
    #[value(name = "bdf2-100")]
    Bdf2,
    #[value(name = "bdf3-1000")]
    Bdf3,
}

impl RunArgs {
    fn overrides(&self, method: Option<Method>) -> anyhow::Result<Overrides> {
        let refine = match self.refine {
            Some(Refine::Bdf2) => Some(BdfScheme::new(2, 100)?),
            Some(Refine::Bdf3) => Some(BdfScheme::new(3, 1000)?),
            None => None,
        };
        Ok(Overrides {
            method: method.map(|m| match m {
                Method::Rksm => BasisKind::Rational,
                Method::Eksm => BasisKind::Extended,
            }),
            tol: self.tol,
            timesteps: self.timesteps,
            refine,
            max_dim: self.max_dim,
            out: self.out.clone(),
            real_shifts_only: self.real_shifts_only,
        })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DRE_LOG_LEVEL", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Solve { run, method } => cmd_solve(&run, method),
        Command::Convergence { run } => cmd_convergence(&run),
        Command::Report { dirs } => cmd_report(&dirs),
    }
}

fn prepare(run: &RunArgs, method: Option<Method>) -> anyhow::Result<(DreProblem, SolverConfig, PathBuf)> {
    let cfg = RunConfig::load(&run.config)?;
    let ov = run.overrides(method)?;
    let solver = cfg.solver_config(&ov)?;
    let out = cfg.out_dir(&ov)?;
    let problem = cfg.problem.build().context("building problem")?;
    solver.validate(problem.n())?;
    info!("problem {:?} n = {}", cfg.problem.name, problem.n());
    Ok((problem, solver, out))
}

fn cmd_solve(run: &RunArgs, method: Option<Method>) -> anyhow::Result<ExitCode> {
    let (problem, solver, out) = prepare(run, method)?;
    let start = Instant::now();
    let result = solve_dre(&problem, &solver)?;
    let total = start.elapsed().as_secs_f64();
    let rows = output::history_rows(&result.history, &result);
    let summary = output::write_result(&out, solver.kind, &result, &rows, total)?;
    println!(
        "{} n={} dim={} backward_error={:.3e} converged={} ranks={}..{} seconds={:.3}",
        summary.method, summary.n, summary.vecs, summary.backward_error, summary.converged, summary.min_rank, summary.max_rank, total
    );
    if !result.converged {
        eprintln!("not converged to tol {:e} within max_dim {}", solver.tol, result.state.dim());
        return Ok(ExitCode::from(EXIT_UNCONVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct ConvergenceRow {
    method: &'static str,
    iteration: usize,
    basis_dim: usize,
    backward_error: Option<f64>,
    wall_seconds: f64,
}

fn cmd_convergence(run: &RunArgs) -> anyhow::Result<ExitCode> {
    let (problem, base, out) = prepare(run, None)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut rows = Vec::new();
    let mut all_converged = true;
    for kind in [BasisKind::Rational, BasisKind::Extended] {
        let config = SolverConfig { kind, ..base.clone() };
        let result = solve_dre(&problem, &config)?;
        info!("{}: dim {} converged {}", kind.label(), result.state.dim(), result.converged);
        all_converged &= result.converged;
        rows.extend(result.history.iter().map(|r| ConvergenceRow {
            method: kind.label(),
            iteration: r.iteration,
            basis_dim: r.basis_dim,
            backward_error: r.estimate.map(|e| e.backward_error),
            wall_seconds: r.wall_seconds,
        }));
    }
    let path = out.join("convergence.csv");
    output::write_csv(&path, &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    if !all_converged {
        return Ok(ExitCode::from(EXIT_UNCONVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(dirs: &[PathBuf]) -> anyhow::Result<ExitCode> {
    let loaded = dirs.iter().map(|d| output::load_result(d)).collect::<anyhow::Result<Vec<(Summary, Vec<IndexRow>)>>>()?;
    println!("{:<32} {:>6} {:>8} {:>8} {:>8} {:>12} {:>12} {:>10}", "result", "method", "vecs", "min_rank", "max_rank", "reduction_s", "refine_s", "total_s");
    for (dir, (s, index)) in dirs.iter().zip(&loaded) {
        let min = index.iter().map(|r| r.rank).min().unwrap_or(0);
        let max = index.iter().map(|r| r.rank).max().unwrap_or(0);
        println!(
            "{:<32} {:>6} {:>8} {:>8} {:>8} {:>12.3} {:>12.3} {:>10.3}",
            dir.display().to_string(),
            s.method,
            s.vecs,
            min,
            max,
            s.reduction_seconds,
            s.refinement_seconds,
            s.total_seconds
        );
    }
    Ok(ExitCode::SUCCESS)
}
