//! Batch runner for the shock tube, refinement study, decay and
//! equilibrium-sweep experiments.
//!
//! Exit codes: 0 success, 2 invariant failure, 3 configuration or I/O
//! error, 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qboltz::experiments::{
    run_ap_decay, run_convergence, run_equilibrium_check, run_sod, ExperimentConfig, ExperimentKind,
};
use qboltz::Error;

#[derive(Parser)]
#[command(
    name = "qboltz",
    version,
    about = "Quantum Boltzmann AP exponential Runge-Kutta experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sod shock tube, with the Euler reference for small epsilon.
    Sod(Common),
    /// Self-convergence study on smooth periodic data.
    Convergence(Common),
    /// Decay of |f - M_q| for several Knudsen numbers.
    ApDecay(Common),
    /// Invariants of the discrete collision operator over a (z, T) sweep.
    EquilibriumCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with flat key = value settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. --set epsilon=1e-2 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory [default: results/<experiment>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

const INVARIANT_FAILURE: u8 = 2;
const CONFIG_FAILURE: u8 = 3;
const NUMERICAL_FAILURE: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        NUMERICAL_FAILURE
    } else {
        CONFIG_FAILURE
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4e}"))
}

fn run(kind: ExperimentKind, common: &Common) -> Result<bool, Error> {
    let cfg = ExperimentConfig::load(kind, common.config.as_deref(), &common.set)?;
    let default_out = Path::new("results").join(kind.name());
    let out = common.out.as_deref().unwrap_or(&default_out);
    match kind {
        ExperimentKind::Sod => {
            let r = run_sod(&cfg, Some(out))?;
            println!(
                "sod: {} steps, h = {:.4e}, mu = {:.4e}, max z = {:.4e}",
                r.steps, r.step_size, r.mu, r.max_z
            );
            if let Some(d) = r.vs_exact {
                println!(
                    "  L1 vs exact Riemann: rho {:.4e}, e {:.4e}, z {:.4e}",
                    d.rho, d.e, d.z
                );
            }
            if let Some(d) = r.vs_euler {
                println!(
                    "  L1 vs Euler solver:  rho {:.4e}, e {:.4e}, z {:.4e}",
                    d.rho, d.e, d.z
                );
            }
            println!("  conservation drift: {:?}", r.conservation_drift);
            Ok(true)
        }
        ExperimentKind::Convergence => {
            let r = run_convergence(&cfg, Some(out))?;
            println!("level  n_x  error       slope");
            for (i, l) in r.levels.iter().enumerate() {
                println!(
                    "{i:>5} {:>4}  {}  {}",
                    l.n_x,
                    fmt_opt(l.error),
                    fmt_opt(l.local_slope)
                );
            }
            println!("least-squares slope: {:.4}", r.slope);
            Ok(true)
        }
        ExperimentKind::ApDecay => {
            let r = run_ap_decay(&cfg, Some(out))?;
            for run in &r.runs {
                let last = run.series.last().map(|p| p.1).unwrap_or(f64::NAN);
                println!(
                    "epsilon = {:.1e}: final |f - M_q| = {last:.4e}",
                    run.epsilon
                );
            }
            if r.ordered {
                println!("ordering holds at every output time");
            } else {
                println!("ordering violated at t = {:?}", r.violations);
            }
            Ok(r.ordered)
        }
        ExperimentKind::EquilibriumCheck => {
            let r = run_equilibrium_check(&cfg, Some(out))?;
            let checked = r.points.iter().filter(|p| !p.excluded).count();
            println!(
                "{checked} points checked, {} excluded",
                r.points.len() - checked
            );
            for f in &r.failures {
                println!("  FAIL {f}");
            }
            Ok(r.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Sod(c) => (ExperimentKind::Sod, c),
        Command::Convergence(c) => (ExperimentKind::Convergence, c),
        Command::ApDecay(c) => (ExperimentKind::ApDecay, c),
        Command::EquilibriumCheck(c) => (ExperimentKind::EquilibriumCheck, c),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(CONFIG_FAILURE);
        }
    }
    match run(kind, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(INVARIANT_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
