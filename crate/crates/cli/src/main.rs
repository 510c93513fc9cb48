//! `kato`: heat-kernel, control-pair and compactness checks from the command
//! line. Exit status 0 when every asserted bound holds, 2 on a violation and
//! 1 on an input error.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use kato_core::Tolerances;

use args::{
    Cli, Command, CompactCommand, ControlCommand, DemoCommand, DominateCommand, GraphCommand,
    HeatCommand,
};
use commands::RunContext;

/// Caps the worker threads of every parallel check.
const THREADS_ENV: &str = "KATO_SPEC_THREADS";

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .parse()
            .with_context(|| format!("{THREADS_ENV}={value} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn tolerances(overrides: &[String], allow_loosen: bool) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .with_context(|| format!("tolerance override `{item}` must be NAME=VALUE"))?;
        let value: f64 = value
            .parse()
            .with_context(|| format!("bad tolerance value in `{item}`"))?;
        tol.set(name.trim(), value, allow_loosen)?;
    }
    Ok(tol)
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let cx = RunContext {
        seed: cli.global.seed,
        tol: tolerances(&cli.global.tolerances, cli.global.allow_loosen)?,
    };
    let outcome = match &cli.command {
        Command::Graph(GraphCommand::Validate(a)) => commands::graph_validate(&cx, a)?,
        Command::Heat(HeatCommand::Kernel(a)) => commands::heat_kernel(a)?,
        Command::Heat(HeatCommand::Verify(a)) => commands::heat_verify(&cx, a)?,
        Command::Heat(HeatCommand::Minimal(a)) => commands::heat_minimal(&cx, a)?,
        Command::Control(ControlCommand::Check(a)) => commands::control_check(&cx, a)?,
        Command::Control(ControlCommand::Fit(a)) => commands::control_fit(&cx, a)?,
        Command::Compact(CompactCommand::Certify(a)) => commands::compact_certify(&cx, a)?,
        Command::Dominate(DominateCommand::Check(a)) => commands::dominate_check(&cx, a)?,
        Command::Demo(DemoCommand::CoulombLattice(a)) => commands::demo_coulomb(&cx, a)?,
    };
    output::emit(
        &outcome,
        cli.global.out.as_deref(),
        cli.global.csv.as_deref(),
    )?;
    for line in output::describe_failures(&outcome.rows) {
        eprintln!("{line}");
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
