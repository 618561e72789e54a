//! The `diagnose` reports: commutator battery, surface-QG comparison, and
//! manufactured-solution convergence. Each returns a human-readable
//! summary and optionally writes the raw numbers as CSV.

use std::path::Path;
use std::sync::Arc;

use cylqg_core::diagnostics::bessel::DiskSpectrum;
use cylqg_core::elliptic::EllipticOptions;
use cylqg_core::{
    commutator_check, make_grid, make_manufactured, project_compatible, solve_elliptic,
    sqg_compare, ManufacturedCaseId,
};

use crate::config::{RunConfig, Setup};
use crate::CliError;

fn write_csv(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    if let Some(path) = out {
        std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Leibniz-defect ratios of composed difference operators on seeded random
/// smooth fields, at the config grid and its doubling. A bounded, grid-
/// stable max ratio is the point: the estimate's constant does not blow up
/// under refinement.
pub fn commutator_report(
    cfg: &RunConfig,
    trials: usize,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let g = &cfg.grid;
    let coarse = Arc::new(
        make_grid(g.n_r, g.n_theta, g.n_z, cfg.h).map_err(|e| CliError::Config(format!("grid: {e}")))?,
    );
    let fine = Arc::new(
        make_grid(2 * g.n_r, 2 * g.n_theta, 2 * g.n_z, cfg.h)
            .map_err(|e| CliError::Config(format!("grid (doubled): {e}")))?,
    );
    let mut csv = String::from("s,n_r,n_theta,n_z,trial,ratio\n");
    let mut summary = String::from("commutator battery (max defect ratio over trials)\n");
    for s in 2..=4 {
        let rc = commutator_check(&coarse, s, trials, cfg.seed);
        let rf = commutator_check(&fine, s, trials, cfg.seed);
        for (grid, report) in [(&coarse, &rc), (&fine, &rf)] {
            for t in &report.trials {
                csv.push_str(&format!(
                    "{s},{},{},{},{},{}\n",
                    grid.n_r, grid.n_theta, grid.n_z, t.trial, t.ratio
                ));
            }
        }
        let stable = rf.max_ratio <= 1.5 * rc.max_ratio;
        summary.push_str(&format!(
            "  s = {s}: coarse {:.4}, fine {:.4}, fine/coarse {:.3} — {}\n",
            rc.max_ratio,
            rf.max_ratio,
            rf.max_ratio / rc.max_ratio,
            if stable { "stable" } else { "NOT STABLE" },
        ));
    }
    write_csv(out, &csv)?;
    Ok(summary)
}

/// Compares this model's reconstruction of bottom-surface data against the
/// spectral construction with zero lateral Dirichlet values. The nonzero
/// lateral trace and O(1) velocity discrepancy are what distinguish the
/// two models.
pub fn sqg_report(
    cfg: &RunConfig,
    config_dir: &Path,
    m_max: usize,
    l_max: usize,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let setup = Setup::build(cfg, config_dir).map_err(|e| CliError::Config(e.to_string()))?;
    if setup.g_bottom.linf_norm() == 0.0 {
        return Err(CliError::Config(
            "initial_data.g_bottom: the surface-QG comparison needs nonzero bottom surface data"
                .into(),
        ));
    }
    let spectrum = DiskSpectrum::new(m_max, l_max);
    let report = sqg_compare(&setup.g_bottom, &spectrum)
        .map_err(|e| CliError::Runtime(format!("comparison solve failed: {e}")))?;
    let csv = format!(
        "lateral_trace_sup,velocity_discrepancy,projection_residual\n{},{},{}\n",
        report.lateral_trace_sup, report.velocity_discrepancy, report.projection_residual
    );
    write_csv(out, &csv)?;
    Ok(format!(
        "surface-QG comparison on {}×{}×{} (m ≤ {m_max}, l ≤ {l_max})\n  sup |lateral trace|      : {:.6e}\n  velocity discrepancy     : {:.6e}\n  dropped surface data     : {:.6e}\n",
        cfg.grid.n_r,
        cfg.grid.n_theta,
        cfg.grid.n_z,
        report.lateral_trace_sup,
        report.velocity_discrepancy,
        report.projection_residual,
    ))
}

/// Convergence of the reconstruction on the closed-form catalogue at the
/// config grid and its doubling.
pub fn manufactured_report(
    cfg: &RunConfig,
    case: Option<&str>,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let cases: Vec<ManufacturedCaseId> = match case {
        None => ManufacturedCaseId::ALL.to_vec(),
        Some(name) => vec![ManufacturedCaseId::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = ManufacturedCaseId::ALL.iter().map(|c| c.name()).collect();
            CliError::Config(format!("unknown case {name:?}; known cases: {}", known.join(", ")))
        })?],
    };
    let profile = Setup::build(cfg, Path::new("."))
        .map_err(|e| CliError::Config(e.to_string()))?
        .profile;

    let mut csv = String::from("case,n_r,n_theta,n_z,rel_l2_error\n");
    let mut summary = String::from("manufactured-solution convergence (relative L² error)\n");
    for id in cases {
        let mut errors = Vec::new();
        for scale in [1, 2] {
            let g = &cfg.grid;
            let grid = Arc::new(
                make_grid(scale * g.n_r, scale * g.n_theta, scale * g.n_z, cfg.h)
                    .map_err(|e| CliError::Config(format!("grid: {e}")))?,
            );
            let case = make_manufactured(id, &grid, &profile);
            // sampling the closed forms leaves a quadrature-sized imbalance;
            // project it out so this measures the scheme, not the sampling
            let (data, _) = project_compatible(&case.data, &profile);
            let solved = solve_elliptic(&data, &profile, EllipticOptions::default())
                .map_err(|e| CliError::Runtime(format!("{}: solve failed: {e}", id.name())))?;
            let mut diff = solved.psi.clone();
            let mean = case.psi.integral() / (std::f64::consts::PI * grid.h);
            diff.axpy(-1.0, &case.psi);
            diff.shift(mean);
            let err = diff.l2_norm() / case.psi_l2_analytic;
            csv.push_str(&format!("{},{},{},{},{err}\n", id.name(), grid.n_r, grid.n_theta, grid.n_z));
            errors.push(err);
        }
        let order = (errors[0] / errors[1]).log2();
        summary.push_str(&format!(
            "  {:<16} {:.4e} → {:.4e}, order {:.2}\n",
            id.name(),
            errors[0],
            errors[1],
            order,
        ));
    }
    write_csv(out, &csv)?;
    Ok(summary)
}
