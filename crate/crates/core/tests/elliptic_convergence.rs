//! Convergence of the elliptic reconstruction on the manufactured
//! catalogue, plus agreement between the direct and chart-transformed
//! solution paths.

use std::sync::Arc;

use cylqg_core::{
    make_grid, make_manufactured, project_compatible, solve_elliptic, solve_elliptic_chart_path,
    EllipticOptions, ManufacturedCaseId, ScalarField3D, StratificationProfile,
};

/// Relative L² distance between the reconstruction and the exact solution,
/// both shifted to discrete mean zero (the reconstruction fixes the free
/// constant that way).
fn reconstruction_error(
    id: ManufacturedCaseId,
    n: usize,
    profile: &StratificationProfile,
) -> f64 {
    let grid = Arc::new(make_grid(n, n.max(16), n, profile.h).unwrap());
    let case = make_manufactured(id, &grid, profile);
    // sampling the closed forms leaves an O(h²) quadrature residual in the
    // compatibility identity; project it out so every resolution solves a
    // consistent problem
    let (data, _) = project_compatible(&case.data, profile);
    let psi = solve_elliptic(&data, profile, EllipticOptions::default()).unwrap();
    let volume = core::f64::consts::PI * grid.h;
    let mean_exact = case.psi.integral() / volume;
    let mut diff = psi.psi.clone();
    let mut exact = case.psi.clone();
    exact.shift(-mean_exact);
    diff.axpy(-1.0, &exact);
    diff.l2_norm() / case.psi_l2_analytic
}

#[test]
fn catalogue_cases_converge_at_second_order() {
    let profile = StratificationProfile::poly_flat(1.0, 1.15, 0.45).unwrap();
    for id in ManufacturedCaseId::ALL {
        let coarse = reconstruction_error(id, 16, &profile);
        let fine = reconstruction_error(id, 32, &profile);
        let order = (coarse / fine).log2();
        assert!(
            order >= 1.9,
            "{id:?}: errors {coarse:.3e} -> {fine:.3e}, order {order:.2}"
        );
    }
}

#[test]
fn convergence_holds_with_constant_stratification_too() {
    let profile = StratificationProfile::constant(1.0, 1.0).unwrap();
    for id in [ManufacturedCaseId::AxisymNeumann, ManufacturedCaseId::Mode2Dirichlet] {
        let coarse = reconstruction_error(id, 16, &profile);
        let fine = reconstruction_error(id, 32, &profile);
        let order = (coarse / fine).log2();
        assert!(
            order >= 1.9,
            "{id:?}: errors {coarse:.3e} -> {fine:.3e}, order {order:.2}"
        );
    }
}

#[test]
fn chart_path_agrees_with_the_direct_solver_within_truncation() {
    // both paths discretize the same continuum problem at 2nd order, so
    // their gap must be bounded by (a small multiple of) the larger of
    // the two truncation errors — and shrink with it under refinement
    let profile = StratificationProfile::poly_flat(1.0, 1.2, 0.6).unwrap();
    let id = ManufacturedCaseId::MixedFlux;
    let mut gaps = Vec::new();
    let mut errs = Vec::new();
    for n in [16usize, 32] {
        let grid = Arc::new(make_grid(n, 16, n, 1.0).unwrap());
        let case = make_manufactured(id, &grid, &profile);
        let (data, _) = project_compatible(&case.data, &profile);
        let direct = solve_elliptic(&data, &profile, EllipticOptions::default()).unwrap();
        let chart = solve_elliptic_chart_path(&data, &profile).unwrap();
        let mut gap_field: ScalarField3D = direct.psi.clone();
        gap_field.axpy(-1.0, &chart);
        gaps.push(gap_field.l2_norm() / case.psi_l2_analytic);
        errs.push(reconstruction_error(id, n, &profile));
    }
    for (gap, err) in gaps.iter().zip(errs.iter()) {
        assert!(
            gap <= &(2.0 * err),
            "gap {gap:.3e} exceeds twice the truncation error {err:.3e}"
        );
    }
    assert!(gaps[1] <= gaps[0] / 2.0, "gap does not refine: {gaps:?}");
}
