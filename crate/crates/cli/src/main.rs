//! `cylqg` — simulate inviscid quasi-geostrophic flow in a cylinder.
//!
//! Exit codes: 0 success, 2 configuration error, 3 compatibility failure,
//! 4 run stopped because no time step contracted at `dt.min`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use cylqg::config::{RunConfig, Setup};
use cylqg::{diagnose, driver, fielddump, CliError};
use cylqg_core::elliptic::{EllipticOptions, EllipticSolver};
use cylqg_core::{check_full_compatibility, energy_norm, EllipticData, EllipticError, StopReason};

#[derive(Parser)]
#[command(name = "cylqg", version, about = "Quasi-geostrophic flow in a cylinder")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the initial data against the solvability hypotheses.
    CheckCompat {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reconstruct the stream function once and write it as a field dump.
    SolveElliptic {
        #[arg(long)]
        config: PathBuf,
        /// Output path for the stream-function dump.
        #[arg(long)]
        out: PathBuf,
    },
    /// Advance the initial data to t_end, writing diagnostics, particle
    /// traces, and snapshots into the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Numerical cross-checks reported as CSV plus a summary.
    Diagnose {
        #[command(subcommand)]
        what: DiagnoseCmd,
    },
    /// Continue a saved snapshot to the config's t_end.
    Resume {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum DiagnoseCmd {
    /// Commutator-estimate defect ratios on seeded random smooth fields.
    Commutator {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Write the per-trial ratios as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the reconstruction against the zero-lateral-Dirichlet
    /// spectral construction for the same bottom-surface data.
    SqgCompare {
        #[arg(long)]
        config: PathBuf,
        /// Azimuthal truncation of the spectral construction.
        #[arg(long, default_value_t = 8)]
        m_max: usize,
        /// Radial eigenfunctions per azimuthal mode.
        #[arg(long, default_value_t = 12)]
        l_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence on the closed-form solution catalogue.
    Manufactured {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to one catalogue case by name.
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::CheckCompat { config } => {
            let (cfg, dir) = load(&config)?;
            let setup = Setup::build(&cfg, &dir).map_err(|e| CliError::Config(e.to_string()))?;
            let data = elliptic_data(&setup)?;
            let report = check_full_compatibility(&data, &setup.profile, cfg.tolerances.collar);
            print!("{}", driver::render_compat_report(&report, Some(cfg.tolerances.compat_tol)));
            if report.passes(cfg.tolerances.compat_tol) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
        Cmd::SolveElliptic { config, out } => {
            let (cfg, dir) = load(&config)?;
            let setup = Setup::build(&cfg, &dir).map_err(|e| CliError::Config(e.to_string()))?;
            let solver = EllipticSolver::new(
                Arc::clone(&setup.grid),
                setup.profile.clone(),
                EllipticOptions::default(),
            )
            .map_err(|e| CliError::Runtime(format!("solver construction failed: {e}")))?;
            let data = elliptic_data(&setup)?;
            let psi = solver.solve(&data).map_err(|e| match e {
                EllipticError::CompatibilityViolation { .. } => CliError::Compat(e.to_string()),
                other => CliError::Runtime(other.to_string()),
            })?;
            fielddump::write_volume(&out, "psi", &psi.psi).map_err(CliError::Runtime)?;
            let trace_sup =
                psi.lateral_trace.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if psi.meta.residual_norm > cfg.tolerances.solver_tol {
                log::warn!(
                    "post-solve residual {:.3e} exceeds tolerances.solver_tol = {:.1e}",
                    psi.meta.residual_norm,
                    cfg.tolerances.solver_tol
                );
            }
            println!("stream function written to {}", out.display());
            println!("  compatibility residual : {:.6e}", psi.meta.compat_residual);
            println!("  applied flux shift     : {:.6e}", psi.meta.j_shift);
            println!("  post-solve residual    : {:.6e}", psi.meta.residual_norm);
            println!("  volume mean            : {:.6e}", psi.mean);
            println!("  sup |lateral trace|    : {:.6e}", trace_sup);
            println!("  energy norm            : {:.6e}", energy_norm(&psi.psi, &setup.profile));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run { config, out_dir } => {
            let (cfg, dir) = load(&config)?;
            let artifacts = driver::execute_run(&cfg, &dir, &out_dir)?;
            finish_run(artifacts)
        }
        Cmd::Resume { snapshot, config, out_dir } => {
            let (cfg, _) = load(&config)?;
            let artifacts = driver::execute_resume(&cfg, &snapshot, &out_dir)?;
            finish_run(artifacts)
        }
        Cmd::Diagnose { what } => {
            let summary = match what {
                DiagnoseCmd::Commutator { config, trials, out } => {
                    let (cfg, _) = load(&config)?;
                    diagnose::commutator_report(&cfg, trials, out.as_deref())?
                }
                DiagnoseCmd::SqgCompare { config, m_max, l_max, out } => {
                    let (cfg, dir) = load(&config)?;
                    diagnose::sqg_report(&cfg, &dir, m_max, l_max, out.as_deref())?
                }
                DiagnoseCmd::Manufactured { config, case, out } => {
                    let (cfg, _) = load(&config)?;
                    diagnose::manufactured_report(&cfg, case.as_deref(), out.as_deref())?
                }
            };
            print!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load(path: &PathBuf) -> Result<(RunConfig, PathBuf), CliError> {
    RunConfig::load(path).map_err(|e| CliError::Config(e.to_string()))
}

fn elliptic_data(setup: &Setup) -> Result<EllipticData, CliError> {
    EllipticData::new(
        setup.f.clone(),
        setup.g_bottom.clone(),
        setup.g_top.clone(),
        setup.j.clone(),
    )
    .map_err(|e| CliError::Config(format!("initial data rejected: {e}")))
}

fn finish_run(artifacts: driver::RunArtifacts) -> Result<ExitCode, CliError> {
    let outcome = &artifacts.outcome;
    println!("stop       : {}", driver::stop_name(outcome.stop));
    println!("t_star     : {}", outcome.t_star);
    println!("steps      : {} (total {})", outcome.records.len(), artifacts.steps_total);
    println!(
        "support    : min boundary distance {:.6} (started {:.6})",
        artifacts.final_min_distance, artifacts.initial_min_distance
    );
    println!("snapshot   : {}", artifacts.final_snapshot.display());
    if outcome.stop == StopReason::NoContraction {
        eprintln!(
            "no time step contracted at dt.min; state saved at t_star = {}",
            outcome.t_star
        );
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}
