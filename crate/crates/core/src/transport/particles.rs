//! Passive tracer particles.
//!
//! Particles carry a horizontal position and a z-level tag; the flow is
//! horizontal, so a particle never leaves its level. They advance by the
//! same midpoint rule as the grid tracers (run forward rather than
//! backward) and their distance to the boundary circle is the quantity of
//! interest: the lateral boundary is a streamline, so trajectories started
//! inside the disk must stay away from it.

use alloc::vec::Vec;

use super::interp::PlaneSampler;
use super::{TransportError, VelocityField};
use crate::math;

/// A set of tagged particles at a common time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// z-level index of each particle.
    pub level: Vec<usize>,
    pub t: f64,
}

impl ParticleSet {
    /// Validates positions (inside the closed unit disk) and level tags.
    pub fn new(
        positions: &[(f64, f64)],
        levels: &[usize],
        n_z: usize,
        t: f64,
    ) -> Result<Self, TransportError> {
        assert_eq!(positions.len(), levels.len(), "one level tag per particle");
        for (idx, &(px, py)) in positions.iter().enumerate() {
            let r = math::hypot(px, py);
            if !(r <= 1.0) {
                return Err(TransportError::ParticleOutsideDomain { index: idx, radius: r });
            }
        }
        for (idx, &lvl) in levels.iter().enumerate() {
            if lvl >= n_z {
                return Err(TransportError::ParticleLevelOutOfRange { index: idx, level: lvl, n_z });
            }
        }
        Ok(ParticleSet {
            x: positions.iter().map(|p| p.0).collect(),
            y: positions.iter().map(|p| p.1).collect(),
            level: levels.to_vec(),
            t,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Smallest distance from any particle to the boundary circle
    /// (infinity for an empty set).
    pub fn min_boundary_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (px, py) in self.x.iter().zip(&self.y) {
            let d = 1.0 - math::hypot(*px, *py);
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Advances every particle one forward-midpoint step.
    pub fn advect(&self, vel: &VelocityField, dt: f64, cfl_safety: f64) -> Result<Self, TransportError> {
        vel.check_dt(dt, cfl_safety)?;
        let mut out = self.clone();
        for p in 0..self.len() {
            let k = self.level[p];
            let sx = PlaneSampler::for_field(&vel.u_x, k);
            let sy = PlaneSampler::for_field(&vel.u_y, k);
            let (x0, y0) = (self.x[p], self.y[p]);
            let (r0, th0) = polar_clamped(x0, y0);
            let (ux0, uy0) = (sx.eval(r0, th0), sy.eval(r0, th0));
            let (rm, thm) = polar_clamped(x0 + 0.5 * dt * ux0, y0 + 0.5 * dt * uy0);
            let (umx, umy) = (sx.eval(rm, thm), sy.eval(rm, thm));
            let mut x1 = x0 + dt * umx;
            let mut y1 = y0 + dt * umy;
            // the boundary is a streamline; pull truncation overshoot back
            let r1 = math::hypot(x1, y1);
            if r1 > 1.0 {
                x1 /= r1;
                y1 /= r1;
            }
            out.x[p] = x1;
            out.y[p] = y1;
        }
        out.t = self.t + dt;
        Ok(out)
    }
}

/// Polar coordinates clamped to the closed disk, θ wrapped to [0, 2π).
#[inline]
fn polar_clamped(x: f64, y: f64) -> (f64, f64) {
    let r = math::hypot(x, y).min(1.0);
    let mut th = math::atan2(y, x);
    if th < 0.0 {
        th += 2.0 * core::f64::consts::PI;
    }
    (r, th)
}

/// Endpoint of a particle trace plus the worst boundary approach seen.
#[derive(Debug, Clone)]
pub struct TraceResult {
    pub set: ParticleSet,
    /// Minimum over all particles and all visited times (including the
    /// start) of the distance to the boundary circle.
    pub min_boundary_distance: f64,
}

/// Traces particles through a sequence of (velocity, dt) steps.
pub fn trace_particles<'a, I>(
    start: &ParticleSet,
    steps: I,
    cfl_safety: f64,
) -> Result<TraceResult, TransportError>
where
    I: IntoIterator<Item = (&'a VelocityField, f64)>,
{
    let mut set = start.clone();
    let mut min_d = set.min_boundary_distance();
    for (vel, dt) in steps {
        set = set.advect(vel, dt, cfl_safety)?;
        let d = set.min_boundary_distance();
        if d < min_d {
            min_d = d;
        }
    }
    Ok(TraceResult { set, min_boundary_distance: min_d })
}
