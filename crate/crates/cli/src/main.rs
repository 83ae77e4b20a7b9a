//! Batch front end for the `stagflow` solvers.

mod commands;
mod config;
mod failure;
mod output;
mod plot;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, Overrides, RunConfig};
use output::{Output, Summary};

#[derive(Parser)]
#[command(name = "stagflow", version, about = "Periodic stagnation-point Euler flows: solvers and checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Eulerian spectral run with invariant monitoring.
    Simulate(CommonArgs),
    /// Flow-map run, checked against the Eulerian solver.
    Lagrangian(CommonArgs),
    /// Exact piecewise-affine two-phase solution.
    Twophase(CommonArgs),
    /// Separable solutions: Riccati factor and integral identity.
    Separable(CommonArgs),
    /// Residuals of the lifted n-dimensional Euler flow.
    LiftCheck(CommonArgs),
    /// Spatial and temporal self-convergence.
    Convergence(CommonArgs),
    /// Parallel sweep over n, amplitude and M.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long = "M", value_name = "M")]
    m: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T", value_name = "T")]
    t_end: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,
}

impl Sub {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::Lagrangian(a) => (Command::Lagrangian, a),
            Sub::Twophase(a) => (Command::Twophase, a),
            Sub::Separable(a) => (Command::Separable, a),
            Sub::LiftCheck(a) => (Command::LiftCheck, a),
            Sub::Convergence(a) => (Command::Convergence, a),
            Sub::Sweep(a) => (Command::Sweep, a),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, args) = cli.command.split();
    let ov = Overrides {
        n: args.n,
        m: args.m,
        dt: args.dt,
        t_end: args.t_end,
        out: args.out,
        no_plots: args.no_plots,
    };
    let cfg = match RunConfig::resolve(command, args.config.as_deref(), &ov).and_then(|c| {
        c.validate(command)?;
        Ok(c)
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("stagflow {command}: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let out = match Output::create(&cfg.out, cfg.plots) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("stagflow {command}: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let (summary, code) = match commands::run(command, &cfg, &out) {
        Ok(s) => {
            let code = s.exit_code();
            (s, code)
        }
        Err(e) => {
            eprintln!("stagflow {command}: {e}");
            (Summary::from_failure(command, &cfg, &e), e.exit_code())
        }
    };
    if let Err(e) = out.summary(&summary) {
        eprintln!("stagflow {command}: cannot write the summary: {e}");
        return ExitCode::from(e.exit_code());
    }
    log::info!("{command}: status {:?}, checks pass: {}", summary.status, summary.all_checks_pass);
    ExitCode::from(code)
}
