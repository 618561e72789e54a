//! Core numerics for quasi-geostrophic flow in a cylinder.
//!
//! The library reconstructs a stream function from interior data, boundary
//! fluxes and a lateral flux profile, differentiates it into a horizontal
//! velocity field, and transports the interior and surface buoyancy fields
//! semi-Lagrangially. A per-step Picard fixed point couples the two.
//!
//! All loops run in a fixed, documented order, so results are bitwise
//! reproducible across runs on the same target.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature and enable `libm` for float intrinsics.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod diagnostics;
pub mod elliptic;
pub mod geometry;
mod math;
mod stencil;
pub mod stratification;
pub mod timestepper;
pub mod transport;

pub use diagnostics::{
    commutator_check, h4_proxy_surface, h4_proxy_volume, make_manufactured, sqg_compare,
    CommutatorReport, ManufacturedCase, ManufacturedCaseId, SqgReport,
};
pub use diagnostics::bessel::DiskSpectrum;
pub use elliptic::{
    check_basic_compatibility, check_full_compatibility, energy_norm, neumann_trace,
    project_compatible, solve_elliptic, solve_elliptic_chart_path, CompatibilityReport,
    EllipticData, EllipticError, EllipticOptions, EllipticSolver, ReconstructionMeta,
    StreamFunction,
};
pub use geometry::{
    circle_average, from_modes, make_grid, surface_to_modes, to_modes, CylGrid, GridError,
    ModeStack, ScalarField3D, Surface, SurfaceField,
};
pub use stratification::{
    solve_vertical_chart, validate_profile, ChartError, ProfileError, ProfileForm, ProfileReport,
    StratificationProfile, VerticalChart,
};
pub use timestepper::{
    advance_with, apply_solution_operator, estimate_ball_radius, picard_advance, run, run_with,
    PicardDiagnostics, QGState, RunOutcome, RunParams, SolutionStep, StepRecord, StepperOptions,
    StopReason, TimestepError,
};
pub use transport::{
    advect_interior, advect_interior_with_source, advect_surface, trace_particles,
    velocity_from_stream, AdvectOptions, BetaScheme, ParticleSet, TraceResult, TransportError,
    VelocityField,
};
