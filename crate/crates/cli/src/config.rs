//! Run configuration: schema, parsing, and semantic validation.
//!
//! Configs are JSON. Every field has a default, so `{}` is a valid config
//! (zero initial data on a small grid). Parsing reports the offending line
//! and column; semantic validation reports the offending field by name.
//!
//! The initial-data recipe builds fields from named terms:
//!
//! * interior terms: `{"kind":"bump", "x","y","width","amplitude",
//!   "z_profile"}` — a radial quartic bump `a·(1 − d²/w²)⁴` around `(x,y)`
//!   supported on `d < w`, optionally modulated in z; or
//!   `{"kind":"file","path":…}` — a volume field dump added verbatim.
//! * surface terms: the same bump on a horizontal disk,
//!   `{"kind":"disk-eigenfunction","m","l","amplitude"}` — a Dirichlet
//!   disk eigenfunction `a·J_m(j_{m,l} r)·cos(mθ)`, or a `file` term
//!   reading a surface dump.
//! * the flux datum: `{"kind":"matched-constant"}` (constant chosen so the
//!   sampled data satisfy the compatibility identity exactly),
//!   `{"kind":"constant","value":…}`, `{"kind":"array","values":[…]}`, or
//!   `{"kind":"csv","path":…}` — one value per line, `n_z` lines, resolved
//!   relative to the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use cylqg_core::diagnostics::bessel::DiskSpectrum;
use cylqg_core::transport::BetaScheme;
use cylqg_core::{
    make_grid, CylGrid, ParticleSet, RunParams, ScalarField3D, StepperOptions,
    StratificationProfile, Surface, SurfaceField,
};

use crate::fielddump;

/// A problem with the configuration: a parse failure or a semantic error.
/// Rendered with the field name (or line/column) so configs are fixable
/// without reading source.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, problem: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {problem}"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_n_r")]
    pub n_r: usize,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_z")]
    pub n_z: usize,
}

fn default_n_r() -> usize {
    12
}
fn default_n_theta() -> usize {
    16
}
fn default_n_z() -> usize {
    8
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_r: default_n_r(), n_theta: default_n_theta(), n_z: default_n_z() }
    }
}

/// Stratification profile entry; `kind` selects the form.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ProfileSpec {
    #[serde(rename = "constant")]
    Constant { value: f64 },
    /// base + amp·z⁴(h−z)⁴/(h/2)⁸ — flat through third order at both ends.
    #[serde(rename = "poly-flat")]
    PolyFlat { base: f64, amp: f64 },
    #[serde(rename = "samples")]
    Samples { values: Vec<f64> },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Constant { value: 1.0 }
    }
}

/// Vertical modulation of an interior bump term.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ZProfile {
    /// Constant 1.
    #[serde(rename = "uniform")]
    Uniform,
    /// 1 + slope·z/h.
    #[serde(rename = "linear")]
    Linear { slope: f64 },
}

impl Default for ZProfile {
    fn default() -> Self {
        ZProfile::Uniform
    }
}

impl ZProfile {
    fn eval(&self, z: f64, h: f64) -> f64 {
        match self {
            ZProfile::Uniform => 1.0,
            ZProfile::Linear { slope } => 1.0 + slope * z / h,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InteriorTerm {
    #[serde(rename = "bump")]
    Bump {
        x: f64,
        y: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        z_profile: ZProfile,
    },
    /// Volume field dump added verbatim (grid dimensions must match).
    #[serde(rename = "file")]
    File { path: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SurfaceTerm {
    #[serde(rename = "bump")]
    Bump { x: f64, y: f64, width: f64, amplitude: f64 },
    #[serde(rename = "disk-eigenfunction")]
    DiskEigenfunction { m: usize, l: usize, amplitude: f64 },
    /// Surface field dump added verbatim (grid and surface must match).
    #[serde(rename = "file")]
    File { path: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum JSpec {
    /// Constant chosen so the sampled (f, g, j) satisfy the compatibility
    /// identity to round-off.
    #[serde(rename = "matched-constant")]
    MatchedConstant,
    #[serde(rename = "constant")]
    Constant { value: f64 },
    #[serde(rename = "array")]
    Array { values: Vec<f64> },
    /// Single-column CSV, one value per z node.
    #[serde(rename = "csv")]
    Csv { path: String },
}

impl Default for JSpec {
    fn default() -> Self {
        JSpec::MatchedConstant
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    #[serde(default)]
    pub f: Vec<InteriorTerm>,
    #[serde(default)]
    pub g_bottom: Vec<SurfaceTerm>,
    #[serde(default)]
    pub g_top: Vec<SurfaceTerm>,
    #[serde(default)]
    pub j: JSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Full-compatibility gate for `run` (also the pass threshold of
    /// `check-compat`).
    #[serde(default = "default_compat_tol")]
    pub compat_tol: f64,
    /// Picard convergence threshold in the energy norm.
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    /// Relative width of the support collar checked near the boundary.
    #[serde(default = "default_collar")]
    pub collar: f64,
    /// Post-solve residual above which `solve-elliptic` warns. The
    /// per-mode systems are solved directly, so this is a verification
    /// threshold, not an iteration control.
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    /// Local-error target reserved for the transformed-vertical-coordinate
    /// validation path.
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
}

fn default_compat_tol() -> f64 {
    1e-6
}
fn default_picard_tol() -> f64 {
    1e-8
}
fn default_collar() -> f64 {
    0.1
}
fn default_solver_tol() -> f64 {
    1e-8
}
fn default_ode_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            compat_tol: default_compat_tol(),
            picard_tol: default_picard_tol(),
            collar: default_collar(),
            solver_tol: default_solver_tol(),
            ode_tol: default_ode_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtControls {
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    /// dt ≤ gain / (R + β₀) with R the data-size ball-radius estimate.
    #[serde(default = "default_dt_gain")]
    pub gain: f64,
    /// Give up (stop reason `no-contraction`) when halving falls below this.
    #[serde(default = "default_dt_min")]
    pub min: f64,
    /// Prefactor of the ball-radius estimate.
    #[serde(default = "default_c_tilde")]
    pub c_tilde: f64,
    #[serde(default = "default_max_picard_iter")]
    pub max_picard_iter: usize,
}

fn default_cfl_safety() -> f64 {
    0.5
}
fn default_dt_gain() -> f64 {
    0.25
}
fn default_dt_min() -> f64 {
    1e-6
}
fn default_c_tilde() -> f64 {
    1.0
}
fn default_max_picard_iter() -> usize {
    40
}

impl Default for DtControls {
    fn default() -> Self {
        DtControls {
            cfl_safety: default_cfl_safety(),
            gain: default_dt_gain(),
            min: default_dt_min(),
            c_tilde: default_c_tilde(),
            max_picard_iter: default_max_picard_iter(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    /// Particles per support ring; 0 disables tracing (the diagnostics
    /// column then reports `inf`).
    #[serde(default = "default_particle_count")]
    pub count: usize,
}

fn default_particle_count() -> usize {
    8
}

impl Default for ParticleSpec {
    fn default() -> Self {
        ParticleSpec { count: default_particle_count() }
    }
}

/// The full run configuration. Every field is optional in the file.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub beta0: f64,
    /// "invariant" advects F + β₀y as one field; "source" uses the
    /// explicit −β₀∂ₓΨ source term.
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub initial_data: InitialDataSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub dt: DtControls,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Snapshot cadence in committed steps; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub particles: ParticleSpec,
    /// Seed forwarded to seeded diagnostics (the run loop itself draws no
    /// random numbers).
    #[serde(default)]
    pub seed: u64,
}

fn default_h() -> f64 {
    1.0
}
fn default_t_end() -> f64 {
    1.0
}
fn default_max_steps() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
pub enum SchemeSpec {
    #[default]
    #[serde(rename = "invariant")]
    Invariant,
    #[serde(rename = "source")]
    Source,
}

impl RunConfig {
    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<(RunConfig, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok((cfg, dir))
    }

    /// Parses config text and runs semantic validation.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            ConfigError(format!("parse error at line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-by-field semantic checks; the error names the first offender.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.n_r < 6 {
            return Err(err("grid.n_r", format!("must be at least 6 (got {})", g.n_r)));
        }
        if g.n_z < 6 {
            return Err(err("grid.n_z", format!("must be at least 6 (got {})", g.n_z)));
        }
        if g.n_theta < 4 || g.n_theta % 2 != 0 {
            return Err(err("grid.n_theta", format!("must be even and at least 4 (got {})", g.n_theta)));
        }
        if !(self.h > 0.0) {
            return Err(err("h", format!("must be positive (got {})", self.h)));
        }
        match &self.profile {
            ProfileSpec::Constant { value } if !(*value > 0.0) => {
                return Err(err("profile.value", format!("must be positive (got {value})")));
            }
            ProfileSpec::PolyFlat { base, .. } if !(*base > 0.0) => {
                return Err(err("profile.base", format!("must be positive (got {base})")));
            }
            ProfileSpec::Samples { values } if values.len() < 6 => {
                return Err(err("profile.values", format!("need at least 6 samples (got {})", values.len())));
            }
            _ => {}
        }
        if !self.beta0.is_finite() || self.beta0 < 0.0 {
            return Err(err("beta0", format!("must be finite and non-negative (got {})", self.beta0)));
        }
        for (name, value) in [
            ("tolerances.compat_tol", self.tolerances.compat_tol),
            ("tolerances.picard_tol", self.tolerances.picard_tol),
            ("tolerances.solver_tol", self.tolerances.solver_tol),
            ("tolerances.ode_tol", self.tolerances.ode_tol),
            ("dt.cfl_safety", self.dt.cfl_safety),
            ("dt.gain", self.dt.gain),
            ("dt.min", self.dt.min),
            ("dt.c_tilde", self.dt.c_tilde),
            ("t_end", self.t_end),
        ] {
            if !(value > 0.0) {
                return Err(err(name, format!("must be positive (got {value})")));
            }
        }
        if !(self.tolerances.collar > 0.0 && self.tolerances.collar < 0.5) {
            return Err(err("tolerances.collar", format!("must lie in (0, 0.5) (got {})", self.tolerances.collar)));
        }
        if self.dt.max_picard_iter == 0 {
            return Err(err("dt.max_picard_iter", "must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(err("max_steps", "must be at least 1"));
        }
        self.validate_terms()?;
        Ok(())
    }

    fn validate_terms(&self) -> Result<(), ConfigError> {
        for (idx, term) in self.initial_data.f.iter().enumerate() {
            if let InteriorTerm::Bump { x, y, width, z_profile, .. } = term {
                let field = format!("initial_data.f[{idx}]");
                validate_bump(&field, *x, *y, *width)?;
                if let ZProfile::Linear { slope } = z_profile {
                    if !slope.is_finite() {
                        return Err(err(&field, "z_profile slope must be finite"));
                    }
                }
            }
        }
        for (side, terms) in
            [("g_bottom", &self.initial_data.g_bottom), ("g_top", &self.initial_data.g_top)]
        {
            for (idx, term) in terms.iter().enumerate() {
                let field = format!("initial_data.{side}[{idx}]");
                match term {
                    SurfaceTerm::Bump { x, y, width, .. } => validate_bump(&field, *x, *y, *width)?,
                    SurfaceTerm::DiskEigenfunction { l, .. } if *l == 0 => {
                        return Err(err(&field, "eigenfunction index l starts at 1"));
                    }
                    _ => {}
                }
            }
        }
        match &self.initial_data.j {
            JSpec::Array { values } if values.len() != self.grid.n_z => {
                return Err(err(
                    "initial_data.j.values",
                    format!("need one value per z node ({} values, grid has n_z = {})", values.len(), self.grid.n_z),
                ));
            }
            JSpec::Constant { value } if !value.is_finite() => {
                return Err(err("initial_data.j.value", "must be finite"));
            }
            _ => {}
        }
        Ok(())
    }
}

fn validate_bump(field: &str, x: f64, y: f64, width: f64) -> Result<(), ConfigError> {
    if !(width > 0.0) {
        return Err(err(field, format!("width must be positive (got {width})")));
    }
    let reach = (x * x + y * y).sqrt() + width;
    if reach > 1.0 {
        return Err(err(field, format!("bump support leaves the unit disk (|center| + width = {reach:.3})")));
    }
    Ok(())
}

/// Config materialized into core objects: grid, profile, sampled initial
/// data, flux datum, and the seeded tracer particles.
pub struct Setup {
    pub grid: Arc<CylGrid>,
    pub profile: StratificationProfile,
    pub f: ScalarField3D,
    pub g_bottom: SurfaceField,
    pub g_top: SurfaceField,
    pub j: Vec<f64>,
    pub particles: ParticleSet,
}

impl Setup {
    /// Samples the recipe on the grid. `config_dir` anchors relative paths
    /// in `file`/`csv` terms.
    pub fn build(cfg: &RunConfig, config_dir: &Path) -> Result<Setup, ConfigError> {
        let grid = Arc::new(
            make_grid(cfg.grid.n_r, cfg.grid.n_theta, cfg.grid.n_z, cfg.h)
                .map_err(|e| err("grid", e))?,
        );
        let profile = match &cfg.profile {
            ProfileSpec::Constant { value } => StratificationProfile::constant(cfg.h, *value),
            ProfileSpec::PolyFlat { base, amp } => StratificationProfile::poly_flat(cfg.h, *base, *amp),
            ProfileSpec::Samples { values } => StratificationProfile::from_samples(cfg.h, values.clone()),
        }
        .map_err(|e| err("profile", e))?;

        let f = build_interior(&grid, &cfg.initial_data.f, config_dir)?;
        let g_bottom =
            build_surface(&grid, Surface::Bottom, &cfg.initial_data.g_bottom, config_dir)?;
        let g_top = build_surface(&grid, Surface::Top, &cfg.initial_data.g_top, config_dir)?;
        let j = build_j(&cfg.initial_data.j, &grid, &profile, &f, &g_bottom, &g_top, config_dir)?;
        let particles = seed_particles(cfg, &grid)?;
        Ok(Setup { grid, profile, f, g_bottom, g_top, j, particles })
    }
}

/// a·(1 − d²/w²)⁴ on d < w, zero outside; C³ across the support edge.
fn bump(x: f64, y: f64, cx: f64, cy: f64, w: f64, a: f64) -> f64 {
    let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    let s = 1.0 - d2 / (w * w);
    if s > 0.0 {
        a * s * s * s * s
    } else {
        0.0
    }
}

fn build_interior(
    grid: &Arc<CylGrid>,
    terms: &[InteriorTerm],
    dir: &Path,
) -> Result<ScalarField3D, ConfigError> {
    let mut out = ScalarField3D::zeros(grid);
    for (idx, term) in terms.iter().enumerate() {
        match term {
            InteriorTerm::Bump { x, y, width, amplitude, z_profile } => {
                let h = grid.h;
                let add = ScalarField3D::from_fn(grid, |r, th, z| {
                    bump(r * th.cos(), r * th.sin(), *x, *y, *width, *amplitude)
                        * z_profile.eval(z, h)
                });
                out.axpy(1.0, &add);
            }
            InteriorTerm::File { path } => {
                let add = fielddump::read_volume(&dir.join(path), grid)
                    .map_err(|e| err(&format!("initial_data.f[{idx}].path"), e))?;
                out.axpy(1.0, &add);
            }
        }
    }
    Ok(out)
}

fn build_surface(
    grid: &Arc<CylGrid>,
    surface: Surface,
    terms: &[SurfaceTerm],
    dir: &Path,
) -> Result<SurfaceField, ConfigError> {
    let side = match surface {
        Surface::Bottom => "g_bottom",
        Surface::Top => "g_top",
    };
    let mut out = SurfaceField::zeros(grid, surface);
    for (idx, term) in terms.iter().enumerate() {
        match term {
            SurfaceTerm::Bump { x, y, width, amplitude } => {
                let add = SurfaceField::from_fn(grid, surface, |r, th| {
                    bump(r * th.cos(), r * th.sin(), *x, *y, *width, *amplitude)
                });
                for (o, v) in out.values.iter_mut().zip(&add.values) {
                    *o += v;
                }
            }
            SurfaceTerm::DiskEigenfunction { m, l, amplitude } => {
                let spectrum = DiskSpectrum::new(*m, *l);
                let add = SurfaceField::from_fn(grid, surface, |r, th| {
                    amplitude * spectrum.radial(*m, *l, r) * (*m as f64 * th).cos()
                });
                for (o, v) in out.values.iter_mut().zip(&add.values) {
                    *o += v;
                }
            }
            SurfaceTerm::File { path } => {
                let add = fielddump::read_surface(&dir.join(path), grid, surface)
                    .map_err(|e| err(&format!("initial_data.{side}[{idx}].path"), e))?;
                for (o, v) in out.values.iter_mut().zip(&add.values) {
                    *o += v;
                }
            }
        }
    }
    Ok(out)
}

fn build_j(
    spec: &JSpec,
    grid: &Arc<CylGrid>,
    profile: &StratificationProfile,
    f: &ScalarField3D,
    g_bottom: &SurfaceField,
    g_top: &SurfaceField,
    dir: &Path,
) -> Result<Vec<f64>, ConfigError> {
    match spec {
        JSpec::MatchedConstant => {
            // ∫f = 2π∫j + λ(0)∫g_b + λ(h)∫g_t with j constant
            let imbalance = f.integral()
                - profile.lambda(0.0) * g_bottom.integral()
                - profile.lambda(grid.h) * g_top.integral();
            let value = imbalance / (2.0 * std::f64::consts::PI * grid.h);
            Ok(vec![value; grid.n_z])
        }
        JSpec::Constant { value } => Ok(vec![*value; grid.n_z]),
        JSpec::Array { values } => Ok(values.clone()),
        JSpec::Csv { path } => {
            let full = dir.join(path);
            let text = std::fs::read_to_string(&full).map_err(|e| {
                err("initial_data.j.path", format!("cannot read {}: {e}", full.display()))
            })?;
            let mut values = Vec::new();
            for (line_no, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let v: f64 = trimmed.parse().map_err(|_| {
                    err("initial_data.j.path", format!("line {}: not a number: {trimmed:?}", line_no + 1))
                })?;
                values.push(v);
            }
            if values.len() != grid.n_z {
                return Err(err(
                    "initial_data.j.path",
                    format!("need one value per z node ({} values, grid has n_z = {})", values.len(), grid.n_z),
                ));
            }
            Ok(values)
        }
    }
}

/// Seeds `count` particles per ring on the support circle of every bump
/// term: interior bumps at every z level (the flow is z-dependent),
/// surface bumps on their own level. Eigenfunction and file terms have no
/// advertised support circle and seed nothing.
fn seed_particles(cfg: &RunConfig, grid: &Arc<CylGrid>) -> Result<ParticleSet, ConfigError> {
    let count = cfg.particles.count;
    let mut positions = Vec::new();
    let mut levels = Vec::new();
    let mut ring = |cx: f64, cy: f64, w: f64, level: usize| {
        for q in 0..count {
            let phi = 2.0 * std::f64::consts::PI * q as f64 / count as f64;
            positions.push((cx + w * phi.cos(), cy + w * phi.sin()));
            levels.push(level);
        }
    };
    if count > 0 {
        for term in &cfg.initial_data.f {
            if let InteriorTerm::Bump { x, y, width, .. } = term {
                for k in 0..grid.n_z {
                    ring(*x, *y, *width, k);
                }
            }
        }
        for (surface, terms) in [
            (Surface::Bottom, &cfg.initial_data.g_bottom),
            (Surface::Top, &cfg.initial_data.g_top),
        ] {
            for term in terms {
                if let SurfaceTerm::Bump { x, y, width, .. } = term {
                    ring(*x, *y, *width, surface.z_index(grid));
                }
            }
        }
    }
    ParticleSet::new(&positions, &levels, grid.n_z, 0.0)
        .map_err(|e| err("particles", format!("seeding failed: {e}")))
}

impl RunConfig {
    /// The stepper options this config describes.
    pub fn stepper_options(&self) -> StepperOptions {
        StepperOptions {
            beta0: self.beta0,
            scheme: match self.scheme {
                SchemeSpec::Invariant => BetaScheme::Invariant,
                SchemeSpec::Source => BetaScheme::Source,
            },
            cfl_safety: self.dt.cfl_safety,
            picard_tol: self.tolerances.picard_tol,
            picard_max_iter: self.dt.max_picard_iter,
            c_tilde: self.dt.c_tilde,
        }
    }

    /// The run-loop parameters this config describes.
    pub fn run_params(&self) -> RunParams {
        RunParams {
            stepper: self.stepper_options(),
            t_end: self.t_end,
            max_steps: self.max_steps,
            dt_min: self.dt.min,
            dt_gain: self.dt.gain,
            compat_tol: self.tolerances.compat_tol,
            collar: self.tolerances.collar,
        }
    }
}
