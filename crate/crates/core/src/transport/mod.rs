//! Semi-Lagrangian transport of tracers by stream-function velocities.
//!
//! The horizontal velocity is the perpendicular gradient of the stream
//! function, u = (−∂_y Ψ, ∂_x Ψ), evaluated per azimuthal mode: the angular
//! derivative is spectral, the radial derivative is a 4th-order finite
//! difference continued across the axis by mode parity. Because the stream
//! function's non-axisymmetric modes vanish on the lateral boundary, the
//! normal velocity at r = 1 is zero to rounding and the boundary circle is
//! a streamline.
//!
//! Tracers advance by the backward midpoint rule: a half step with the
//! nodal velocity locates the midpoint, the velocity interpolated there
//! carries the full step, and the tracer value is interpolated (bicubic in
//! (r, θ)) at the departure point. Trajectories that leave the disk by
//! truncation error are projected back onto r = 1 − ε.
//!
//! The planetary vorticity gradient β₀ enters interior transport in one of
//! two equivalent discretizations: the invariant form advects F + β₀·y as
//! the conserved quantity, and the source form integrates −β₀·∂_x Ψ along
//! the trajectory with the midpoint rule. The invariant form is the
//! default; the source form exists as an independent cross-check.

mod interp;
mod particles;

pub use interp::PlaneSampler;
pub use particles::{trace_particles, ParticleSet, TraceResult};

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::geometry::{from_modes, to_modes, ScalarField3D, SurfaceField};
use crate::math;
use crate::stencil::fd_weights_uniform;

/// Default advective CFL safety factor.
pub const DEFAULT_CFL_SAFETY: f64 = 0.5;

/// Distance by which escaped departure points are pulled inside the rim.
const RIM_MARGIN: f64 = 1e-12;

/// Transport failures.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    /// The requested step exceeds the advective CFL bound.
    CflViolation { dt: f64, limit: f64 },
    /// A particle was seeded outside the closed unit disk.
    ParticleOutsideDomain { index: usize, radius: f64 },
    /// A particle was tagged to a z level the grid does not have.
    ParticleLevelOutOfRange { index: usize, level: usize, n_z: usize },
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportError::CflViolation { dt, limit } => {
                write!(f, "time step {dt} exceeds the advective CFL limit {limit}")
            }
            TransportError::ParticleOutsideDomain { index, radius } => {
                write!(f, "particle {index} lies outside the unit disk (radius {radius})")
            }
            TransportError::ParticleLevelOutOfRange { index, level, n_z } => {
                write!(f, "particle {index} is tagged to level {level}, grid has {n_z}")
            }
        }
    }
}

impl core::error::Error for TransportError {}

/// How the β₀ term enters interior advection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaScheme {
    /// Advect F + β₀·y as the materially conserved quantity.
    #[default]
    Invariant,
    /// Integrate the source −β₀·∂_x Ψ along the trajectory (midpoint rule).
    Source,
}

/// Options for interior advection.
#[derive(Debug, Clone, Copy)]
pub struct AdvectOptions {
    pub cfl_safety: f64,
    pub scheme: BetaScheme,
}

impl Default for AdvectOptions {
    fn default() -> Self {
        AdvectOptions { cfl_safety: DEFAULT_CFL_SAFETY, scheme: BetaScheme::Invariant }
    }
}

/// Horizontal velocity field u = ∇⊥Ψ on the cylinder grid.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub u_x: ScalarField3D,
    pub u_y: ScalarField3D,
    pub max_speed: f64,
}

impl VelocityField {
    /// A zero velocity field (useful as the initial Picard guess).
    pub fn zero(grid: &alloc::sync::Arc<crate::geometry::CylGrid>) -> Self {
        VelocityField {
            u_x: ScalarField3D::zeros(grid),
            u_y: ScalarField3D::zeros(grid),
            max_speed: 0.0,
        }
    }

    /// Largest stable step for the given safety factor.
    pub fn cfl_limit(&self, safety: f64) -> f64 {
        if self.max_speed > 0.0 {
            safety * self.u_x.grid.min_horizontal_spacing() / self.max_speed
        } else {
            f64::INFINITY
        }
    }

    fn check_dt(&self, dt: f64, safety: f64) -> Result<(), TransportError> {
        let limit = self.cfl_limit(safety);
        if dt > limit {
            Err(TransportError::CflViolation { dt, limit })
        } else {
            Ok(())
        }
    }

    /// Largest |u·ν| over the lateral boundary nodes; zero to rounding for
    /// velocities built from admissible stream functions.
    pub fn max_normal_speed_at_rim(&self) -> f64 {
        let g = &self.u_x.grid;
        let i = g.n_r - 1;
        let mut worst = 0.0f64;
        for k in 0..g.n_z {
            for j in 0..g.n_theta {
                let un = self.u_x.at(i, j, k) * g.trig_cos[j] + self.u_y.at(i, j, k) * g.trig_sin[j];
                worst = worst.max(math::abs(un));
            }
        }
        worst
    }
}

/// Differentiates one radial line of mode-m coefficients at 4th order.
///
/// Near the axis the stencil is continued by parity, u_m(−r) = (−1)^m u_m(r);
/// at the rim it turns one-sided so it never reaches past r = 1.
fn radial_derivative_line(
    line: &[Complex64],
    parity: f64,
    dr: f64,
    w_center: &[f64],
    w_edge: &[&[f64]],
    out: &mut [Complex64],
) {
    let n = line.len();
    // extended line: indices 0,1 are the parity ghosts at radii −3/2·dr, −1/2·dr
    let mut ext: Vec<Complex64> = Vec::with_capacity(n + 2);
    ext.push(line[1] * parity);
    ext.push(line[0] * parity);
    ext.extend_from_slice(line);

    let inv_dr = 1.0 / dr;
    for i in 0..n {
        let (window, weights) = if i + 2 < n {
            (&ext[i..i + 5], w_center)
        } else {
            (&ext[n - 3..n + 2], w_edge[i + 2 - n])
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, w) in window.iter().zip(weights.iter()) {
            acc += v * *w;
        }
        out[i] = acc * inv_dr;
    }
}

/// Builds the perpendicular-gradient velocity of a stream function.
pub fn velocity_from_stream(psi: &ScalarField3D) -> VelocityField {
    let grid = psi.grid.clone();
    let (n_r, n_z) = (grid.n_r, grid.n_z);
    let nyquist = grid.n_theta / 2;
    let stack = to_modes(psi);

    // 4th-order first-derivative weights on unit-spaced 5-node windows:
    // centered, then the two one-sided closures used at the rim.
    let w_center = fd_weights_uniform(2.0, 0, 5, 1);
    let w_m1 = fd_weights_uniform(3.0, 0, 5, 1);
    let w_end = fd_weights_uniform(4.0, 0, 5, 1);
    let w_edge: [&[f64]; 2] = [&w_m1, &w_end];

    let mut dpsi_dr = crate::geometry::ModeStack::zeros(&grid);
    let mut u_r_modes = crate::geometry::ModeStack::zeros(&grid);
    let mut deriv = alloc::vec![Complex64::new(0.0, 0.0); n_r];
    for m in 0..grid.n_modes() {
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..n_z {
            let base = k * n_r;
            let line = &stack.mode(m)[base..base + n_r];
            radial_derivative_line(line, parity, grid.dr, &w_center, &w_edge, &mut deriv);
            let dst = dpsi_dr.mode_mut(m);
            dst[base..base + n_r].copy_from_slice(&deriv);

            // spectral angular derivative; the Nyquist mode has no
            // representable first derivative and is dropped
            if m > 0 && m < nyquist {
                let dst = u_r_modes.mode_mut(m);
                for i in 0..n_r {
                    let x = line[i];
                    let scale = -(m as f64) / grid.r_nodes[i];
                    dst[base + i] = Complex64::new(0.0, scale) * x;
                }
            }
        }
    }

    let u_theta = from_modes(&dpsi_dr);
    let u_r = from_modes(&u_r_modes);

    let mut u_x = ScalarField3D::zeros(&grid);
    let mut u_y = ScalarField3D::zeros(&grid);
    let mut max_speed = 0.0f64;
    for k in 0..n_z {
        for j in 0..grid.n_theta {
            let (c, s) = (grid.trig_cos[j], grid.trig_sin[j]);
            for i in 0..n_r {
                let ur = u_r.at(i, j, k);
                let ut = u_theta.at(i, j, k);
                let ux = ur * c - ut * s;
                let uy = ur * s + ut * c;
                *u_x.at_mut(i, j, k) = ux;
                *u_y.at_mut(i, j, k) = uy;
                max_speed = max_speed.max(math::hypot(ux, uy));
            }
        }
    }
    VelocityField { u_x, u_y, max_speed }
}

/// Polar coordinates of a point, projected inside the rim if it escaped.
#[inline]
fn polar_projected(x: f64, y: f64) -> (f64, f64) {
    let mut r = math::hypot(x, y);
    if r > 1.0 {
        r = 1.0 - RIM_MARGIN;
    }
    let mut th = math::atan2(y, x);
    if th < 0.0 {
        th += 2.0 * core::f64::consts::PI;
    }
    (r, th)
}

/// Backward-midpoint departure point for the node at (x, y) in plane k.
#[inline]
fn departure_point(
    x: f64,
    y: f64,
    u_node_x: f64,
    u_node_y: f64,
    sx: &PlaneSampler<'_>,
    sy: &PlaneSampler<'_>,
    dt: f64,
) -> (f64, f64, f64, f64, f64, f64) {
    let (rm, thm) = polar_projected(x - 0.5 * dt * u_node_x, y - 0.5 * dt * u_node_y);
    let umx = sx.eval(rm, thm);
    let umy = sy.eval(rm, thm);
    let xd = x - dt * umx;
    let yd = y - dt * umy;
    let (rd, thd) = polar_projected(xd, yd);
    (rd, thd, xd, yd, rm, thm)
}

/// Advects an interior tracer one step of size `dt`.
///
/// `beta0` is handled by `opts.scheme`; with the source form the stream
/// derivative ∂_x Ψ is taken from the velocity itself (it equals u_y).
pub fn advect_interior(
    f: &ScalarField3D,
    vel: &VelocityField,
    beta0: f64,
    dt: f64,
    opts: &AdvectOptions,
) -> Result<ScalarField3D, TransportError> {
    match opts.scheme {
        BetaScheme::Invariant => advect_plane_set(f, vel, beta0, None, dt, opts.cfl_safety),
        BetaScheme::Source => {
            advect_plane_set(f, vel, beta0, Some(&vel.u_y), dt, opts.cfl_safety)
        }
    }
}

/// Source-form advection with an explicitly supplied ∂_x Ψ field.
///
/// This decouples the advecting velocity from the β₀ source so the two can
/// be tested independently; `advect_interior` with `BetaScheme::Source`
/// passes `vel.u_y` here.
pub fn advect_interior_with_source(
    f: &ScalarField3D,
    vel: &VelocityField,
    stream_dx: &ScalarField3D,
    beta0: f64,
    dt: f64,
    cfl_safety: f64,
) -> Result<ScalarField3D, TransportError> {
    advect_plane_set(f, vel, beta0, Some(stream_dx), dt, cfl_safety)
}

fn advect_plane_set(
    f: &ScalarField3D,
    vel: &VelocityField,
    beta0: f64,
    stream_dx: Option<&ScalarField3D>,
    dt: f64,
    cfl_safety: f64,
) -> Result<ScalarField3D, TransportError> {
    vel.check_dt(dt, cfl_safety)?;
    let grid = f.grid.clone();
    let mut out = ScalarField3D::zeros(&grid);
    for k in 0..grid.n_z {
        let sf = PlaneSampler::for_field(f, k);
        let sx = PlaneSampler::for_field(&vel.u_x, k);
        let sy = PlaneSampler::for_field(&vel.u_y, k);
        let sdx = stream_dx.map(|d| PlaneSampler::for_field(d, k));
        for j in 0..grid.n_theta {
            let (c, s) = (grid.trig_cos[j], grid.trig_sin[j]);
            for i in 0..grid.n_r {
                let r = grid.r_nodes[i];
                let (x, y) = (r * c, r * s);
                let (rd, thd, _xd, yd, rm, thm) = departure_point(
                    x,
                    y,
                    vel.u_x.at(i, j, k),
                    vel.u_y.at(i, j, k),
                    &sx,
                    &sy,
                    dt,
                );
                let mut v = sf.eval(rd, thd);
                match sdx {
                    // conserved quantity F + β₀·y: carry the y offset
                    None => v += beta0 * (yd - y),
                    // midpoint-rule source −β₀·∂ₓΨ along the trajectory
                    Some(ref sp) => v -= dt * beta0 * sp.eval(rm, thm),
                }
                *out.at_mut(i, j, k) = v;
            }
        }
    }
    Ok(out)
}

/// Advects a surface tracer one step (no β₀ term on the surfaces).
pub fn advect_surface(
    g: &SurfaceField,
    vel: &VelocityField,
    dt: f64,
    cfl_safety: f64,
) -> Result<SurfaceField, TransportError> {
    vel.check_dt(dt, cfl_safety)?;
    let grid = g.grid.clone();
    let k = g.surface.z_index(&grid);
    let sg = PlaneSampler::for_surface(g);
    let sx = PlaneSampler::for_field(&vel.u_x, k);
    let sy = PlaneSampler::for_field(&vel.u_y, k);
    let mut out = SurfaceField::zeros(&grid, g.surface);
    for j in 0..grid.n_theta {
        let (c, s) = (grid.trig_cos[j], grid.trig_sin[j]);
        for i in 0..grid.n_r {
            let r = grid.r_nodes[i];
            let (x, y) = (r * c, r * s);
            let (rd, thd, _, _, _, _) = departure_point(
                x,
                y,
                vel.u_x.at(i, j, k),
                vel.u_y.at(i, j, k),
                &sx,
                &sy,
                dt,
            );
            *out.at_mut(i, j) = sg.eval(rd, thd);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, Surface};
    use alloc::sync::Arc;
    use approx::assert_abs_diff_eq;

    fn grid(n_r: usize, n_theta: usize, n_z: usize) -> Arc<crate::geometry::CylGrid> {
        Arc::new(make_grid(n_r, n_theta, n_z, 1.0).unwrap())
    }

    #[test]
    fn constant_stream_gives_zero_velocity() {
        let g = grid(12, 16, 6);
        let psi = ScalarField3D::from_fn(&g, |_, _, _| 3.25);
        let vel = velocity_from_stream(&psi);
        assert!(vel.max_speed <= 1e-12, "max speed {}", vel.max_speed);
    }

    #[test]
    fn radial_stream_gives_solid_body_rotation() {
        // Ψ = 1 − r² → u = ∇⊥Ψ = (2y, −2x): clockwise solid-body rotation
        // at angular speed 2. The radial derivative is quadratic, so the
        // 4th-order differences are exact up to rounding.
        let g = grid(16, 24, 6);
        let psi = ScalarField3D::from_fn(&g, |r, _, _| 1.0 - r * r);
        let vel = velocity_from_stream(&psi);
        for k in [0, 3] {
            for j in [0, 5, 11, 19] {
                for i in [0, 4, 15] {
                    let (x, y) = (
                        g.r_nodes[i] * g.trig_cos[j],
                        g.r_nodes[i] * g.trig_sin[j],
                    );
                    assert_abs_diff_eq!(vel.u_x.at(i, j, k), 2.0 * y, epsilon = 1e-10);
                    assert_abs_diff_eq!(vel.u_y.at(i, j, k), -2.0 * x, epsilon = 1e-10);
                }
            }
        }
        assert_abs_diff_eq!(vel.max_speed, 2.0, epsilon = 1e-10);
        assert!(vel.max_normal_speed_at_rim() <= 1e-11);
    }

    #[test]
    fn linear_stream_gives_uniform_flow() {
        // Ψ = y → u = (−∂_y Ψ, ∂_x Ψ) = (−1, 0)
        let g = grid(16, 32, 6);
        let psi = ScalarField3D::from_fn(&g, |r, th, _| r * crate::math::sin(th));
        let vel = velocity_from_stream(&psi);
        for k in [0, 5] {
            for j in [0, 7, 21] {
                for i in [0, 8, 15] {
                    assert_abs_diff_eq!(vel.u_x.at(i, j, k), -1.0, epsilon = 1e-9);
                    assert_abs_diff_eq!(vel.u_y.at(i, j, k), 0.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_velocity_advection_is_identity() {
        let g = grid(14, 20, 6);
        let f = ScalarField3D::from_fn(&g, |r, th, z| {
            (1.0 - r * r) * crate::math::cos(th) + z * r
        });
        let vel = VelocityField::zero(&g);
        let out = advect_interior(&f, &vel, 0.7, 0.1, &AdvectOptions::default()).unwrap();
        for (a, b) in f.values.iter().zip(&out.values) {
            assert!((a - b).abs() <= 1e-12, "identity advection drifted: {a} vs {b}");
        }
    }

    #[test]
    fn uniform_flow_translates_the_tracer() {
        // u = (−1, 0): after one step the field value at x equals the old
        // value at x + dt·e_x.
        let g = grid(48, 96, 6);
        let psi = ScalarField3D::from_fn(&g, |r, th, _| r * crate::math::sin(th));
        let vel = velocity_from_stream(&psi);
        let bump = |x: f64, y: f64| {
            let d2 = (x - 0.1) * (x - 0.1) + y * y;
            let w2: f64 = 0.45 * 0.45;
            if d2 < w2 {
                let q = 1.0 - d2 / w2;
                q * q * q * q
            } else {
                0.0
            }
        };
        let f = ScalarField3D::from_fn(&g, |r, th, _| {
            bump(r * crate::math::cos(th), r * crate::math::sin(th))
        });
        let dt = 0.008;
        let out = advect_interior(&f, &vel, 0.0, dt, &AdvectOptions::default()).unwrap();
        let mut worst = 0.0f64;
        for j in 0..g.n_theta {
            for i in 0..g.n_r {
                let x = g.r_nodes[i] * g.trig_cos[j];
                let y = g.r_nodes[i] * g.trig_sin[j];
                // skip the sliver where the exact departure point leaves the disk
                if (x + dt) * (x + dt) + y * y >= 1.0 {
                    continue;
                }
                worst = worst.max((out.at(i, j, 2) - bump(x + dt, y)).abs());
            }
        }
        assert!(worst <= 5e-5, "translation error {worst}");
    }

    #[test]
    fn decoupled_source_lowers_the_tracer_uniformly() {
        // zero velocity but ∂ₓΨ ≡ 1: the tracer must drop by exactly β₀·dt
        let g = grid(12, 16, 6);
        let f = ScalarField3D::from_fn(&g, |r, th, _| r * crate::math::cos(th) + 2.0);
        let vel = VelocityField::zero(&g);
        let ones = ScalarField3D::from_fn(&g, |_, _, _| 1.0);
        let (beta0, dt) = (0.3, 0.05);
        let out = advect_interior_with_source(&f, &vel, &ones, beta0, dt, 0.5).unwrap();
        for (a, b) in f.values.iter().zip(&out.values) {
            assert_abs_diff_eq!(a - beta0 * dt, *b, epsilon = 1e-13);
        }
    }

    #[test]
    fn beta_forms_agree_to_step_accuracy() {
        let g = grid(24, 48, 6);
        let psi = ScalarField3D::from_fn(&g, |r, th, z| {
            (1.0 - r * r) * (1.0 + 0.3 * r * crate::math::cos(th)) * (1.0 + 0.2 * z)
        });
        let vel = velocity_from_stream(&psi);
        let f = ScalarField3D::from_fn(&g, |r, th, _| {
            (1.0 - r * r) * r * crate::math::sin(th)
        });
        let (beta0, dt) = (0.8, 0.004);
        let a = advect_interior(
            &f,
            &vel,
            beta0,
            dt,
            &AdvectOptions { scheme: BetaScheme::Invariant, ..Default::default() },
        )
        .unwrap();
        let b = advect_interior(
            &f,
            &vel,
            beta0,
            dt,
            &AdvectOptions { scheme: BetaScheme::Source, ..Default::default() },
        )
        .unwrap();
        let mut worst = 0.0f64;
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
        // both forms are O(dt³)-accurate per step; their difference is too
        assert!(worst <= 1e-6, "scheme discrepancy {worst}");
    }

    #[test]
    fn oversized_step_is_rejected() {
        let g = grid(12, 16, 6);
        let psi = ScalarField3D::from_fn(&g, |r, _, _| 1.0 - r * r);
        let vel = velocity_from_stream(&psi);
        let f = ScalarField3D::zeros(&g);
        let err = advect_interior(&f, &vel, 0.0, 10.0, &AdvectOptions::default());
        assert!(matches!(err, Err(TransportError::CflViolation { .. })));
        // and the limit itself is fine
        let ok = advect_interior(&f, &vel, 0.0, vel.cfl_limit(0.5), &AdvectOptions::default());
        assert!(ok.is_ok());
    }

    #[test]
    fn surface_advection_matches_interior_plane() {
        // z-independent data and velocity: the bottom surface must advect
        // exactly like plane 0 of the volume tracer (β₀ = 0)
        let g = grid(16, 24, 6);
        let psi = ScalarField3D::from_fn(&g, |r, _, _| (1.0 - r * r) * (1.0 + 0.5 * r));
        let vel = velocity_from_stream(&psi);
        let f3 = ScalarField3D::from_fn(&g, |r, th, _| r * r * crate::math::cos(2.0 * th));
        let gs = SurfaceField::from_fn(&g, Surface::Bottom, |r, th| {
            r * r * crate::math::cos(2.0 * th)
        });
        let dt = 0.01;
        let a = advect_interior(&f3, &vel, 0.0, dt, &AdvectOptions::default()).unwrap();
        let b = advect_surface(&gs, &vel, dt, 0.5).unwrap();
        for j in 0..g.n_theta {
            for i in 0..g.n_r {
                assert_abs_diff_eq!(b.at(i, j), a.at(i, j, 0), epsilon = 1e-14);
            }
        }
    }
}
