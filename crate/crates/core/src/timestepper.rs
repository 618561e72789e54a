//! Time advance by per-step Picard fixed-point iteration.
//!
//! One step from t to t + dt freezes a stream-function guess, advects the
//! interior and surface tracers with its velocity, reconstructs the stream
//! function from the advected data (with the static lateral flux), and
//! repeats with the reconstruction as the next guess. The map contracts
//! with a constant proportional to dt times the data size, so the loop
//! converges geometrically when dt is small enough; the step controller
//! halves dt when it sees the iteration diverge and gives up below
//! `dt_min`.
//!
//! Successive-iterate distances are measured in the stratification-weighted
//! gradient norm (`energy_norm`), the implementable stand-in for the
//! fractional trace norms of the continuous theory.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::diagnostics::{h4_proxy_line, h4_proxy_surface, h4_proxy_volume};
use crate::elliptic::{
    check_full_compatibility, energy_norm, CompatibilityReport, EllipticData, EllipticError,
    EllipticOptions, EllipticSolver, StreamFunction,
};
use crate::geometry::{CylGrid, ScalarField3D, SurfaceField};
use crate::stratification::StratificationProfile;
use crate::transport::{
    advect_interior, advect_surface, velocity_from_stream, AdvectOptions, BetaScheme,
    TransportError, VelocityField,
};

/// Default collar fraction for the full-compatibility gate.
pub const DEFAULT_COLLAR: f64 = 0.1;

/// Prognostic state at one instant.
#[derive(Debug, Clone)]
pub struct QGState {
    /// Interior potential vorticity data.
    pub f: ScalarField3D,
    pub g_bottom: SurfaceField,
    pub g_top: SurfaceField,
    /// Static circle-averaged lateral flux datum.
    pub j: Vec<f64>,
    pub t: f64,
    /// Stream function reconstructed from (f, g, j); kept consistent by
    /// every committed step and reused as the next initial guess.
    pub psi_cache: StreamFunction,
}

impl QGState {
    /// Builds the state at time `t` and reconstructs its stream function.
    pub fn new(
        f: ScalarField3D,
        g_bottom: SurfaceField,
        g_top: SurfaceField,
        j: Vec<f64>,
        t: f64,
        solver: &EllipticSolver,
    ) -> Result<Self, TimestepError> {
        let data = EllipticData::new(f, g_bottom, g_top, j)?;
        let psi_cache = solver.solve(&data)?;
        let EllipticData { f, g_bottom, g_top, j } = data;
        Ok(QGState { f, g_bottom, g_top, j, t, psi_cache })
    }

    /// The state's elliptic data (clones the fields).
    pub fn data(&self) -> Result<EllipticData, EllipticError> {
        EllipticData::new(
            self.f.clone(),
            self.g_bottom.clone(),
            self.g_top.clone(),
            self.j.clone(),
        )
    }

    pub fn grid(&self) -> &Arc<CylGrid> {
        &self.f.grid
    }
}

/// Record of one Picard solve.
#[derive(Debug, Clone)]
pub struct PicardDiagnostics {
    /// Applications of the solution operator.
    pub iterates: usize,
    /// Successive-iterate distances in the gradient norm.
    pub residual_history: Vec<f64>,
    /// Worst successive-residual ratio observed above the noise floor
    /// (0 when fewer than two residuals were measured there).
    pub contraction_ratio: f64,
    /// Ball-radius heuristic of the data driving this step.
    pub r_ball: f64,
    pub dt_used: f64,
    pub converged: bool,
}

/// Stepper failures.
#[derive(Debug, Clone)]
pub enum TimestepError {
    /// Initial data violates the full-compatibility hypotheses.
    Initialization { report: CompatibilityReport },
    Elliptic(EllipticError),
    Transport(TransportError),
    /// Successive residuals grew for three consecutive iterates: dt too
    /// large for the contraction. Halve dt and retry.
    NoContraction { dt: f64, last_ratio: f64 },
    /// The iteration kept contracting but missed the tolerance within the
    /// iterate budget.
    PicardStalled { iterates: usize, residual: f64 },
}

impl fmt::Display for TimestepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimestepError::Initialization { report } => write!(
                f,
                "initial data fails full compatibility (corner {:.3e}, surface {:.3e}, flux flatness {:.3e}/{:.3e}, basic {:.3e})",
                report.corner_collar_residual,
                report.surface_support_residual,
                report.flux_flatness_residuals[0],
                report.flux_flatness_residuals[1],
                report.basic_residual
            ),
            TimestepError::Elliptic(e) => write!(f, "elliptic reconstruction failed: {e}"),
            TimestepError::Transport(e) => write!(f, "transport failed: {e}"),
            TimestepError::NoContraction { dt, last_ratio } => write!(
                f,
                "fixed-point iteration diverges at dt = {dt} (residual ratio {last_ratio})"
            ),
            TimestepError::PicardStalled { iterates, residual } => write!(
                f,
                "fixed-point iteration stalled after {iterates} iterates at residual {residual}"
            ),
        }
    }
}

impl core::error::Error for TimestepError {}

impl From<EllipticError> for TimestepError {
    fn from(e: EllipticError) -> Self {
        TimestepError::Elliptic(e)
    }
}

impl From<TransportError> for TimestepError {
    fn from(e: TransportError) -> Self {
        TimestepError::Transport(e)
    }
}

/// Knobs of the per-step fixed-point solve.
#[derive(Debug, Clone, Copy)]
pub struct StepperOptions {
    pub beta0: f64,
    pub scheme: BetaScheme,
    pub cfl_safety: f64,
    /// Convergence tolerance in the gradient norm.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Prefactor of the ball-radius heuristic.
    pub c_tilde: f64,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            beta0: 0.0,
            scheme: BetaScheme::Invariant,
            cfl_safety: crate::transport::DEFAULT_CFL_SAFETY,
            picard_tol: 1e-8,
            picard_max_iter: 40,
            c_tilde: 1.0,
        }
    }
}

/// Output of one application of the frozen-velocity solution operator.
#[derive(Debug, Clone)]
pub struct SolutionStep {
    pub psi: StreamFunction,
    pub f: ScalarField3D,
    pub g_bottom: SurfaceField,
    pub g_top: SurfaceField,
}

/// Applies the solution operator once: advect the tracers one step with
/// the guess's frozen velocity, then reconstruct the stream function from
/// the advected data and the static flux datum.
pub fn apply_solution_operator(
    solver: &EllipticSolver,
    psi_guess: &StreamFunction,
    state: &QGState,
    dt: f64,
    opts: &StepperOptions,
) -> Result<SolutionStep, TimestepError> {
    let vel = velocity_from_stream(&psi_guess.psi);
    apply_with_velocity(solver, &vel, state, dt, opts)
}

fn apply_with_velocity(
    solver: &EllipticSolver,
    vel: &VelocityField,
    state: &QGState,
    dt: f64,
    opts: &StepperOptions,
) -> Result<SolutionStep, TimestepError> {
    let advect_opts = AdvectOptions { cfl_safety: opts.cfl_safety, scheme: opts.scheme };
    let f_new = advect_interior(&state.f, vel, opts.beta0, dt, &advect_opts)?;
    let g_b_new = advect_surface(&state.g_bottom, vel, dt, opts.cfl_safety)?;
    let g_t_new = advect_surface(&state.g_top, vel, dt, opts.cfl_safety)?;
    let data = EllipticData::new(f_new, g_b_new, g_t_new, state.j.clone())?;
    let psi = solver.solve(&data)?;
    let EllipticData { f, g_bottom, g_top, .. } = data;
    Ok(SolutionStep { psi, f, g_bottom, g_top })
}

/// Ball-radius heuristic: 4·C̃ times the summed H⁴-strength proxies of the
/// data. Used to pick dt; never asserted as a rigorous bound.
pub fn estimate_ball_radius(
    f: &ScalarField3D,
    g_bottom: &SurfaceField,
    g_top: &SurfaceField,
    j: &[f64],
    c_tilde: f64,
) -> f64 {
    4.0 * c_tilde
        * (h4_proxy_volume(f)
            + h4_proxy_surface(g_bottom)
            + h4_proxy_surface(g_top)
            + h4_proxy_line(j, &f.grid))
}

/// Advances the state one step of size dt by Picard iteration from the
/// cached stream function.
///
/// On convergence the advected tracers of the final application are
/// committed together with their reconstruction, so the new state's
/// `psi_cache` solves its own data exactly. Divergence (three consecutive
/// growing residuals) reports `NoContraction`: the caller's cue to halve
/// dt.
pub fn picard_advance(
    solver: &EllipticSolver,
    state: &QGState,
    dt: f64,
    opts: &StepperOptions,
) -> Result<(QGState, PicardDiagnostics), TimestepError> {
    let profile = solver.profile();
    // ratios below this residual level are dominated by solver/rounding
    // noise and do not enter the contraction bookkeeping
    let noise_floor = 10.0 * opts.picard_tol;

    let mut guess = state.psi_cache.clone();
    let mut history: Vec<f64> = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut growing = 0usize;
    let mut converged = false;
    let mut last: Option<SolutionStep> = None;

    for _ in 0..opts.picard_max_iter {
        let step = apply_solution_operator(solver, &guess, state, dt, opts)?;
        let mut diff = step.psi.psi.clone();
        diff.axpy(-1.0, &guess.psi);
        let res = energy_norm(&diff, profile);

        if let Some(prev) = history.last().copied() {
            if prev > noise_floor {
                let ratio = res / prev;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                }
                if ratio >= 1.0 {
                    growing += 1;
                    if growing >= 3 {
                        return Err(TimestepError::NoContraction { dt, last_ratio: ratio });
                    }
                } else {
                    growing = 0;
                }
            }
        }
        history.push(res);
        guess = step.psi.clone();
        last = Some(step);
        if res <= opts.picard_tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(TimestepError::PicardStalled {
            iterates: history.len(),
            residual: history.last().copied().unwrap_or(f64::INFINITY),
        });
    }

    let step = last.expect("at least one iterate ran");
    let r_ball = estimate_ball_radius(&state.f, &state.g_bottom, &state.g_top, &state.j, opts.c_tilde);
    let diagnostics = PicardDiagnostics {
        iterates: history.len(),
        residual_history: history,
        contraction_ratio: worst_ratio,
        r_ball,
        dt_used: dt,
        converged,
    };
    let next = QGState {
        f: step.f,
        g_bottom: step.g_bottom,
        g_top: step.g_top,
        j: state.j.clone(),
        t: state.t + dt,
        psi_cache: step.psi,
    };
    Ok((next, diagnostics))
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedEnd,
    MaxSteps,
    /// The contraction failed even at dt_min; the recorded horizon is the
    /// last successful time.
    NoContraction,
}

/// Per-step diagnostics emitted by the run loop.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Time after the step.
    pub t: f64,
    pub dt: f64,
    pub picard_iters: usize,
    pub contraction_ratio: f64,
    pub mass_f: f64,
    pub mass_g_bottom: f64,
    pub mass_g_top: f64,
    /// Gradient (energy) norm of the committed stream function.
    pub energy: f64,
    /// Largest speed of the committed velocity.
    pub max_speed: f64,
}

/// Whole-run controls.
#[derive(Debug, Clone, Copy)]
pub struct RunParams {
    pub stepper: StepperOptions,
    pub t_end: f64,
    pub max_steps: usize,
    pub dt_min: f64,
    /// Cap dt at `dt_gain / (R + β₀)`.
    pub dt_gain: f64,
    /// Tolerance of the full-compatibility gate.
    pub compat_tol: f64,
    /// Collar fraction of the gate.
    pub collar: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            stepper: StepperOptions::default(),
            t_end: 1.0,
            max_steps: 100_000,
            dt_min: 1e-6,
            dt_gain: 0.25,
            compat_tol: 1e-6,
            collar: DEFAULT_COLLAR,
        }
    }
}

/// Result of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: QGState,
    /// Last successfully reached time (equals t_end when stop is ReachedEnd).
    pub t_star: f64,
    pub stop: StopReason,
    pub records: Vec<StepRecord>,
}

/// Advances initial data to `t_end`, collecting per-step records.
pub fn run(
    initial: QGState,
    profile: &StratificationProfile,
    params: &RunParams,
) -> Result<RunOutcome, TimestepError> {
    run_with(initial, profile, params, |_, _, _| {})
}

/// `run` with an observer called after every committed step with the new
/// state, its record, and the committed velocity (for particle tracing and
/// snapshot writers).
pub fn run_with(
    initial: QGState,
    profile: &StratificationProfile,
    params: &RunParams,
    observer: impl FnMut(&QGState, &StepRecord, &VelocityField),
) -> Result<RunOutcome, TimestepError> {
    let data = initial.data()?;
    let report = check_full_compatibility(&data, profile, params.collar);
    if !report.passes(params.compat_tol) {
        return Err(TimestepError::Initialization { report });
    }
    advance_with(initial, profile, params, observer)
}

/// The advance loop of [`run_with`] without the initial-data gate.
///
/// Resuming a saved mid-run state must not re-check the full-compatibility
/// hypotheses: they constrain the *initial* data, and interpolation tails
/// spread a transported field into the support collar at round-off scale
/// long before anything is wrong with the run.
pub fn advance_with(
    initial: QGState,
    profile: &StratificationProfile,
    params: &RunParams,
    mut observer: impl FnMut(&QGState, &StepRecord, &VelocityField),
) -> Result<RunOutcome, TimestepError> {
    let opts = &params.stepper;
    let solver = EllipticSolver::new(
        Arc::clone(initial.grid()),
        profile.clone(),
        EllipticOptions::default(),
    )?;

    let mut state = initial;
    let mut vel = velocity_from_stream(&state.psi_cache.psi);
    let mut records = Vec::new();
    let mut stop = StopReason::MaxSteps;

    for _ in 0..params.max_steps {
        let remaining = params.t_end - state.t;
        if remaining <= 1e-12 * params.t_end.max(1.0) {
            stop = StopReason::ReachedEnd;
            break;
        }

        let r_ball = estimate_ball_radius(
            &state.f,
            &state.g_bottom,
            &state.g_top,
            &state.j,
            opts.c_tilde,
        );
        let mut dt = vel.cfl_limit(opts.cfl_safety);
        let rate = r_ball + opts.beta0;
        if rate > 0.0 {
            dt = dt.min(params.dt_gain / rate);
        }
        dt = dt.min(remaining);

        // halve on any too-large-dt symptom, stop below dt_min: besides an
        // outright divergence, a blowing-up iterate can first trip the CFL
        // guard or push the advected mass balance past the repair threshold
        let (next, diag) = loop {
            match picard_advance(&solver, &state, dt, opts) {
                Ok(pair) => break pair,
                Err(
                    TimestepError::NoContraction { .. }
                    | TimestepError::PicardStalled { .. }
                    | TimestepError::Transport(TransportError::CflViolation { .. })
                    | TimestepError::Elliptic(EllipticError::CompatibilityViolation { .. }),
                ) => {
                    dt *= 0.5;
                    if dt < params.dt_min {
                        return Ok(RunOutcome {
                            t_star: state.t,
                            state,
                            stop: StopReason::NoContraction,
                            records,
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        };

        state = next;
        vel = velocity_from_stream(&state.psi_cache.psi);
        let record = StepRecord {
            t: state.t,
            dt,
            picard_iters: diag.iterates,
            contraction_ratio: diag.contraction_ratio,
            mass_f: state.f.integral(),
            mass_g_bottom: state.g_bottom.integral(),
            mass_g_top: state.g_top.integral(),
            energy: energy_norm(&state.psi_cache.psi, profile),
            max_speed: vel.max_speed,
        };
        observer(&state, &record, &vel);
        records.push(record);
    }

    if stop == StopReason::MaxSteps && params.t_end - state.t <= 1e-12 * params.t_end.max(1.0) {
        stop = StopReason::ReachedEnd;
    }
    Ok(RunOutcome { t_star: state.t, state, stop, records })
}
