//! Run orchestration: advances a state to `t_end` while streaming the
//! diagnostics CSV, tracing particles, and writing snapshots.
//!
//! `execute_run` starts from config-recipe initial data (gated on the
//! solvability hypotheses); `execute_resume` continues a saved snapshot
//! without the gate. Both funnel into the same writer, and all output is a
//! pure function of (config, starting state), so an interrupted-and-resumed
//! trajectory reproduces the uninterrupted one byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cylqg_core::elliptic::{CompatibilityReport, EllipticOptions, EllipticSolver};
use cylqg_core::{
    advance_with, run_with, CylGrid, ParticleSet, QGState, RunOutcome, StepRecord, StopReason,
    StratificationProfile, TimestepError, VelocityField,
};

use crate::config::{RunConfig, Setup};
use crate::snapshot::Snapshot;
use crate::CliError;

/// Columns of `diagnostics.csv`, one row per committed step. `mass_G` is
/// the sum of both surface integrals; `min_support_distance` is the
/// current distance of the closest tracer particle to the boundary circle
/// (`inf` when no particles are seeded).
pub const DIAGNOSTICS_HEADER: &str =
    "t,dt,picard_iters,contraction_ratio,mass_F,mass_G,energy,max_speed,min_support_distance";

/// Columns of `particles.csv`; rows appear at seeding and at every
/// snapshot, tagged with the z level's coordinate and the current time.
pub const PARTICLES_HEADER: &str = "x,y,z_label,t";

/// What a finished (or cleanly stopped) run left behind.
pub struct RunArtifacts {
    pub outcome: RunOutcome,
    /// Global committed-step count (continues across resume).
    pub steps_total: u64,
    pub initial_min_distance: f64,
    pub final_min_distance: f64,
    pub final_snapshot: PathBuf,
}

/// Advances config-recipe initial data from t = 0.
pub fn execute_run(
    cfg: &RunConfig,
    config_dir: &Path,
    out_dir: &Path,
) -> Result<RunArtifacts, CliError> {
    let setup = Setup::build(cfg, config_dir).map_err(|e| CliError::Config(e.to_string()))?;
    let solver = EllipticSolver::new(
        Arc::clone(&setup.grid),
        setup.profile.clone(),
        EllipticOptions::default(),
    )
    .map_err(|e| CliError::Runtime(format!("solver construction failed: {e}")))?;
    let Setup { profile, f, g_bottom, g_top, j, particles, .. } = setup;
    let state = QGState::new(f, g_bottom, g_top, j, 0.0, &solver).map_err(map_step_error)?;
    drive(state, particles, &profile, cfg, out_dir, 0, true)
}

/// Continues a snapshot to the config's `t_end`. The config must describe
/// the same grid the snapshot was taken on.
pub fn execute_resume(
    cfg: &RunConfig,
    snapshot_path: &Path,
    out_dir: &Path,
) -> Result<RunArtifacts, CliError> {
    let snap = Snapshot::read(snapshot_path).map_err(|e| CliError::Config(e.to_string()))?;
    if snap.n_r != cfg.grid.n_r
        || snap.n_theta != cfg.grid.n_theta
        || snap.n_z != cfg.grid.n_z
        || snap.h != cfg.h
    {
        return Err(CliError::Config(format!(
            "snapshot grid {}×{}×{} (h = {}) does not match the config grid {}×{}×{} (h = {})",
            snap.n_r, snap.n_theta, snap.n_z, snap.h, cfg.grid.n_r, cfg.grid.n_theta, cfg.grid.n_z, cfg.h,
        )));
    }
    let (state, particles) = snap.restore().map_err(|e| CliError::Config(e.to_string()))?;
    let profile = Setup::build(&strip_initial_data(cfg), Path::new("."))
        .map_err(|e| CliError::Config(e.to_string()))?
        .profile;
    drive(state, particles, &profile, cfg, out_dir, snap.step, false)
}

/// The initial-data recipe is irrelevant to a resume (the state comes from
/// the snapshot); drop it so profile construction cannot trip on it.
fn strip_initial_data(cfg: &RunConfig) -> RunConfig {
    let mut c = cfg.clone();
    c.initial_data = Default::default();
    c.particles.count = 0;
    c
}

fn map_step_error(e: TimestepError) -> CliError {
    match &e {
        TimestepError::Initialization { report } => {
            CliError::Compat(format!("initial data fails the solvability hypotheses\n{}", render_compat_report(report, None)))
        }
        TimestepError::Elliptic(inner) => CliError::Compat(format!("elliptic reconstruction refused the data: {inner}")),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn drive(
    state: QGState,
    particles: ParticleSet,
    profile: &StratificationProfile,
    cfg: &RunConfig,
    out_dir: &Path,
    step0: u64,
    gate: bool,
) -> Result<RunArtifacts, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let params = cfg.run_params();
    let grid = Arc::clone(state.grid());

    let mut writer = RunWriter::create(grid, out_dir, particles, step0, cfg.snapshot_every)?;
    let initial_min_distance = writer.particles.min_boundary_distance();
    if gate {
        writer.write_particle_rows().map_err(CliError::Runtime)?;
    }

    let result = if gate {
        run_with(state, profile, &params, |s, r, v| writer.observe(s, r, v))
    } else {
        advance_with(state, profile, &params, |s, r, v| writer.observe(s, r, v))
    };
    let outcome = result.map_err(map_step_error)?;
    writer.finish().map_err(CliError::Runtime)?;

    let final_snapshot = out_dir.join("final.cqgs");
    Snapshot::capture(&outcome.state, &writer.particles, writer.step)
        .write(&final_snapshot)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let final_min_distance = writer.particles.min_boundary_distance();
    let summary = serde_json::json!({
        "t_star": outcome.t_star,
        "stop": stop_name(outcome.stop),
        "steps_total": writer.step,
        "steps_this_segment": outcome.records.len(),
        "initial_min_support_distance": initial_min_distance,
        "final_min_support_distance": final_min_distance,
    });
    std::fs::write(out_dir.join("run_summary.json"), format!("{summary:#}\n"))
        .map_err(|e| CliError::Runtime(format!("cannot write run summary: {e}")))?;

    Ok(RunArtifacts {
        outcome,
        steps_total: writer.step,
        initial_min_distance,
        final_min_distance,
        final_snapshot,
    })
}

pub fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::ReachedEnd => "reached-end",
        StopReason::MaxSteps => "max-steps",
        StopReason::NoContraction => "no-contraction",
    }
}

/// Streams per-step output. The observer cannot return errors, so the
/// first failure is parked and surfaced by `finish`.
struct RunWriter {
    grid: Arc<CylGrid>,
    out_dir: PathBuf,
    diag: BufWriter<File>,
    pcsv: BufWriter<File>,
    particles: ParticleSet,
    step: u64,
    snapshot_every: usize,
    error: Option<String>,
}

impl RunWriter {
    fn create(
        grid: Arc<CylGrid>,
        out_dir: &Path,
        particles: ParticleSet,
        step0: u64,
        snapshot_every: usize,
    ) -> Result<RunWriter, CliError> {
        let open = |name: &str, header: &str| -> Result<BufWriter<File>, CliError> {
            let path = out_dir.join(name);
            let file = File::create(&path)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "{header}")
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            Ok(w)
        };
        Ok(RunWriter {
            grid,
            out_dir: out_dir.to_path_buf(),
            diag: open("diagnostics.csv", DIAGNOSTICS_HEADER)?,
            pcsv: open("particles.csv", PARTICLES_HEADER)?,
            particles,
            step: step0,
            snapshot_every,
            error: None,
        })
    }

    fn observe(&mut self, state: &QGState, record: &StepRecord, vel: &VelocityField) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = self.observe_inner(state, record, vel) {
            self.error = Some(e);
        }
    }

    fn observe_inner(
        &mut self,
        state: &QGState,
        record: &StepRecord,
        vel: &VelocityField,
    ) -> Result<(), String> {
        self.step += 1;
        // advance the tracers with the committed velocity; the controller
        // already enforced the accuracy CFL at safety 0.5, so the guard
        // here only rejects outright blow-ups
        self.particles = self
            .particles
            .advect(vel, record.dt, 1.0)
            .map_err(|e| format!("particle tracing failed at t = {}: {e}", record.t))?;
        let min_d = self.particles.min_boundary_distance();
        writeln!(
            self.diag,
            "{},{},{},{},{},{},{},{},{}",
            record.t,
            record.dt,
            record.picard_iters,
            record.contraction_ratio,
            record.mass_f,
            record.mass_g_bottom + record.mass_g_top,
            record.energy,
            record.max_speed,
            min_d,
        )
        .map_err(|e| format!("cannot write diagnostics row: {e}"))?;
        self.diag.flush().map_err(|e| format!("cannot flush diagnostics: {e}"))?;

        if self.snapshot_every > 0 && self.step % self.snapshot_every as u64 == 0 {
            let path = self.out_dir.join(format!("snap_{:06}.cqgs", self.step));
            Snapshot::capture(state, &self.particles, self.step)
                .write(&path)
                .map_err(|e| e.to_string())?;
            self.write_particle_rows()?;
        }
        Ok(())
    }

    fn write_particle_rows(&mut self) -> Result<(), String> {
        for p in 0..self.particles.len() {
            writeln!(
                self.pcsv,
                "{},{},{},{}",
                self.particles.x[p],
                self.particles.y[p],
                self.grid.z_nodes[self.particles.level[p]],
                self.particles.t,
            )
            .map_err(|e| format!("cannot write particle row: {e}"))?;
        }
        self.pcsv.flush().map_err(|e| format!("cannot flush particles: {e}"))
    }

    fn finish(&mut self) -> Result<(), String> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.diag.flush().map_err(|e| format!("cannot flush diagnostics: {e}"))?;
        self.pcsv.flush().map_err(|e| format!("cannot flush particles: {e}"))
    }
}

/// Human-readable rendering of the full-compatibility residuals; `tol`
/// adds a PASS/FAIL verdict line.
pub fn render_compat_report(report: &CompatibilityReport, tol: Option<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "  interior support near the surface rim : {:.6e}\n",
        report.corner_collar_residual
    ));
    out.push_str(&format!(
        "  surface support near the rim          : {:.6e}\n",
        report.surface_support_residual
    ));
    out.push_str(&format!(
        "  flux flatness at the surfaces (j', j'''): {:.6e}, {:.6e}\n",
        report.flux_flatness_residuals[0], report.flux_flatness_residuals[1]
    ));
    out.push_str(&format!(
        "  compatibility identity residual       : {:.6e}\n",
        report.basic_residual
    ));
    if let Some(tol) = tol {
        let verdict = if report.passes(tol) { "PASS" } else { "FAIL" };
        out.push_str(&format!("  verdict at tolerance {tol:.1e}: {verdict}\n"));
    }
    out
}
