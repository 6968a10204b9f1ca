//! `hls`: command-line front end for the radial HLS / Lane-Emden laboratory.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid input.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hls_core::riesz::Normalization;
use hls_core::solver::InitRates;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "hls", version, about = "Radial solvers and decay diagnostics for HLS-type systems u = I[v^q], v = I[u^p]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify (n, alpha, p, q) and print every exponent.
    Exponents(Problem),
    /// Bounded solution by damped Picard iteration.
    Solve {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Scale-invariant singular pair A r^{-theta1}, B r^{-theta2}.
    Singular(Problem),
    /// One shot of the radial ODE system (alpha = 2).
    Shoot {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        shot: ShotFlags,
    },
    /// Bisect v(0) for the ground state of the radial ODE system (alpha = 2).
    Bisect {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        shot: ShotFlags,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Decay analysis of a finished run directory.
    Analyze {
        dir: PathBuf,
        /// Check group: 1.1|envelope, 1.3|slow-upper, 1.4|slow, 4|fast-limits.
        #[arg(long, default_value = "1.1")]
        theorem: String,
        /// Where to write the analysis (defaults to DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a summary table.
    VerifyAll {
        /// Criteria by name or number, comma separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Seed of the random oracles; also enables the Monte Carlo cross-check.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Plain,
    Laplacian,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Slow,
    Fast,
}

#[derive(Args)]
struct Problem {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Polyharmonic order; sets alpha = 2k.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// rMin:rMax:count
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    normalization: Option<NormArg>,
    /// JSON file with any of the settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
}

#[derive(Args)]
struct ShotFlags {
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    r_start: Option<f64>,
    #[arg(long)]
    r_end: Option<f64>,
    #[arg(long)]
    samples_per_decade: Option<usize>,
}

impl Problem {
    fn flags(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            alpha: self.alpha,
            k: self.k,
            p: self.p,
            q: self.q,
            grid: self.grid.clone(),
            normalization: self.normalization.map(|n| match n {
                NormArg::Plain => Normalization::Plain,
                NormArg::Laplacian => Normalization::Laplacian,
            }),
            ..RunConfig::default()
        }
    }

    fn resolve(&self, extra: impl FnOnce(&mut RunConfig)) -> hls_core::Result<RunConfig> {
        let mut flags = self.flags();
        extra(&mut flags);
        RunConfig::merged(self.config.as_deref(), &flags)
    }
}

fn run(cli: Cli) -> hls_core::Result<bool> {
    match cli.command {
        Command::Exponents(p) => commands::exponents(&p.resolve(|_| {})?, p.out.as_deref()).map(|_| true),
        Command::Solve { problem, solver } => {
            let cfg = problem.resolve(|c| {
                c.max_iters = solver.max_iters;
                c.damping = solver.damping;
                c.tol = solver.tol;
                c.residual_tol = solver.residual_tol;
                c.init = solver.init.map(|i| match i {
                    InitArg::Slow => InitRates::Slow,
                    InitArg::Fast => InitRates::Fast,
                });
            })?;
            commands::solve(&cfg, problem.out.as_deref()).map(|_| true)
        }
        Command::Singular(p) => commands::singular(&p.resolve(|_| {})?, p.out.as_deref()).map(|_| true),
        Command::Shoot { problem, shot } => {
            let cfg = problem.resolve(|c| shot.apply(c))?;
            commands::shoot_cmd(&cfg, problem.out.as_deref()).map(|_| true)
        }
        Command::Bisect { problem, shot, lo, hi, iters } => {
            let cfg = problem.resolve(|c| {
                shot.apply(c);
                c.lo = lo;
                c.hi = hi;
                c.iters = iters;
            })?;
            commands::bisect(&cfg, problem.out.as_deref()).map(|_| true)
        }
        Command::Analyze { dir, theorem, out } => commands::analyze(&dir, &theorem, out.as_deref()).map(|_| true),
        Command::VerifyAll { only, seed, out } => commands::verify_all(&only, seed, out.as_deref()),
    }
}

impl ShotFlags {
    fn apply(&self, c: &mut RunConfig) {
        c.u0 = self.u0;
        c.xi = self.xi;
        c.r_start = self.r_start;
        c.r_end = self.r_end;
        c.samples_per_decade = self.samples_per_decade;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hls: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
