//! Manufactured solutions for the elliptic reconstruction.
//!
//! Each case picks a closed-form stream function ψ*, differentiates it by
//! hand into the data (f, g, j) = (Lψ*, ∂_νψ*, circle-averaged ∂_rψ*(1,·)),
//! and samples everything on the grid. The data satisfy the compatibility
//! identity exactly in the continuum, so the solver must reproduce ψ* up
//! to its truncation error — the convergence oracle for the whole elliptic
//! path.
//!
//! Conventions match the solver: g is the outward normal derivative
//! (bottom g = −∂_zψ, top g = +∂_zψ, no λ factor), and comparisons must
//! shift ψ* to discrete mean zero because the reconstruction fixes the
//! free constant that way.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::elliptic::EllipticData;
use crate::geometry::{CylGrid, ScalarField3D, Surface, SurfaceField};
use crate::math;
use crate::stratification::StratificationProfile;

/// Catalogue of closed-form cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedCaseId {
    /// ψ* = (1−r²)²·z/h: axisymmetric, Neumann data on both surfaces,
    /// zero lateral flux.
    AxisymNeumann,
    /// ψ* = r²(1−r²)²·cos2θ·cos(πz/h): pure azimuthal mode 2, zero g and
    /// zero j (the circle average of a mode-2 trace vanishes).
    Mode2Dirichlet,
    /// ψ* = (1−r²)·(2 + cos(πz/h) + z/h): axisymmetric with nonzero
    /// Neumann data and a genuinely z-dependent lateral flux j = −2ζ(z).
    MixedFlux,
}

impl ManufacturedCaseId {
    pub const ALL: [ManufacturedCaseId; 3] = [
        ManufacturedCaseId::AxisymNeumann,
        ManufacturedCaseId::Mode2Dirichlet,
        ManufacturedCaseId::MixedFlux,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ManufacturedCaseId::AxisymNeumann => "axisym-neumann",
            ManufacturedCaseId::Mode2Dirichlet => "mode2-dirichlet",
            ManufacturedCaseId::MixedFlux => "mixed-flux",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

/// A sampled manufactured case: the exact solution, its derived data, and
/// the closed-form L² norm of ψ* for relative error reporting.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub id: ManufacturedCaseId,
    /// ψ* sampled at the grid nodes.
    pub psi: ScalarField3D,
    /// (f, g, j) from closed-form differentiation of ψ*.
    pub data: EllipticData,
    /// Analytic ‖ψ*‖_{L²} (independent of the profile).
    pub psi_l2_analytic: f64,
}

/// Samples a catalogue case on the grid with the given stratification.
///
/// The data use the profile's closed-form λ and λ′, so the case is exact
/// for any differentiable profile (sampled profiles go through their
/// documented finite-difference derivative).
pub fn make_manufactured(
    id: ManufacturedCaseId,
    grid: &Arc<CylGrid>,
    profile: &StratificationProfile,
) -> ManufacturedCase {
    let h = grid.h;
    let pi = core::f64::consts::PI;
    match id {
        ManufacturedCaseId::AxisymNeumann => {
            // ψ* = ρ(r)·ζ(z), ρ = (1−r²)², ζ = z/h
            // Δ_Hρ = 16r² − 8, ζ' = 1/h, ζ'' = 0
            let rho = |r: f64| (1.0 - r * r) * (1.0 - r * r);
            let psi = ScalarField3D::from_fn(grid, |r, _, z| rho(r) * z / h);
            let f = ScalarField3D::from_fn(grid, |r, _, z| {
                (16.0 * r * r - 8.0) * z / h + rho(r) * profile.lambda_prime(z) / h
            });
            let g_b = SurfaceField::from_fn(grid, Surface::Bottom, |r, _| -rho(r) / h);
            let g_t = SurfaceField::from_fn(grid, Surface::Top, |r, _| rho(r) / h);
            // ρ'(1) = 0, so the lateral flux vanishes
            let j = alloc::vec![0.0; grid.n_z];
            ManufacturedCase {
                id,
                psi,
                data: EllipticData::new(f, g_b, g_t, j).unwrap(),
                psi_l2_analytic: math::sqrt(pi * h / 15.0),
            }
        }
        ManufacturedCaseId::Mode2Dirichlet => {
            // ψ* = φ(r)·cos2θ·ζ(z), φ = r²(1−r²)², ζ = cos(πz/h)
            // φ'' + φ'/r − 4φ/r² = 8r²(4r² − 3), ζ'(0) = ζ'(h) = 0
            let phi = |r: f64| r * r * (1.0 - r * r) * (1.0 - r * r);
            let k = pi / h;
            let psi = ScalarField3D::from_fn(grid, |r, th, z| {
                phi(r) * math::cos(2.0 * th) * math::cos(k * z)
            });
            let f = ScalarField3D::from_fn(grid, |r, th, z| {
                let zeta = math::cos(k * z);
                let dzeta = -k * math::sin(k * z);
                let ddzeta = -k * k * zeta;
                let horiz = 8.0 * r * r * (4.0 * r * r - 3.0) * zeta;
                let vert = phi(r) * (profile.lambda_prime(z) * dzeta + profile.lambda(z) * ddzeta);
                (horiz + vert) * math::cos(2.0 * th)
            });
            let g_b = SurfaceField::zeros(grid, Surface::Bottom);
            let g_t = SurfaceField::zeros(grid, Surface::Top);
            let j = alloc::vec![0.0; grid.n_z];
            ManufacturedCase {
                id,
                psi,
                data: EllipticData::new(f, g_b, g_t, j).unwrap(),
                psi_l2_analytic: math::sqrt(pi * h / 420.0),
            }
        }
        ManufacturedCaseId::MixedFlux => {
            // ψ* = (1−r²)·ζ(z), ζ = 2 + cos(πz/h) + z/h
            // Δ_H(1−r²) = −4, ∂_rψ*(1,·,z) = −2ζ(z)
            let k = pi / h;
            let zeta = move |z: f64| 2.0 + math::cos(k * z) + z / h;
            let dzeta = move |z: f64| -k * math::sin(k * z) + 1.0 / h;
            let ddzeta = move |z: f64| -k * k * math::cos(k * z);
            let psi = ScalarField3D::from_fn(grid, |r, _, z| (1.0 - r * r) * zeta(z));
            let f = ScalarField3D::from_fn(grid, |r, _, z| {
                -4.0 * zeta(z)
                    + (1.0 - r * r)
                        * (profile.lambda_prime(z) * dzeta(z) + profile.lambda(z) * ddzeta(z))
            });
            let g_b = SurfaceField::from_fn(grid, Surface::Bottom, |r, _| {
                -(1.0 - r * r) * dzeta(0.0)
            });
            let g_t =
                SurfaceField::from_fn(grid, Surface::Top, |r, _| (1.0 - r * r) * dzeta(h));
            let j: Vec<f64> = grid.z_nodes.iter().map(|&z| -2.0 * zeta(z)).collect();
            let l2sq = (pi * h / 3.0) * (41.0 / 6.0 - 4.0 / (pi * pi));
            ManufacturedCase {
                id,
                psi,
                data: EllipticData::new(f, g_b, g_t, j).unwrap(),
                psi_l2_analytic: math::sqrt(l2sq),
            }
        }
    }
}
