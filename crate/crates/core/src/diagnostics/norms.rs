//! Difference-operator Sobolev proxies.
//!
//! The ball-radius heuristic of the time stepper wants an H⁴-strength
//! measure of the data. It is built the plain way: a 2nd-order discrete
//! Laplacian (3-point second differences plus the polar first-derivative
//! and mode terms; 4-point one-sided closures at boundaries; parity ghosts
//! at the axis) applied repeatedly:
//! the proxy is √(‖u‖² + ‖Δu‖² + ‖Δ²u‖²).
//!
//! These are dt heuristics and convergence trackers, not certified norms.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::geometry::{
    from_modes, surface_from_modes, surface_to_modes, to_modes, CylGrid, ScalarField3D,
    SurfaceField,
};
use crate::math;
use crate::stencil::fd_weights_uniform;

/// Second differences of one radial mode line, including the polar
/// (1/r)∂_r and −m²/r² terms: a 2nd-order horizontal Laplacian.
fn horizontal_mode_laplacian(
    line: &[Complex64],
    m: usize,
    grid: &CylGrid,
    w1_end: &[f64],
    w2_end: &[f64],
    out: &mut [Complex64],
) {
    let n = line.len();
    let dr = grid.dr;
    let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mm = m as f64 * m as f64;
    for i in 0..n {
        let r = grid.r_nodes[i];
        let (d2, d1) = if i == 0 {
            let ghost = line[0] * parity;
            (
                (line[1] - line[0] * 2.0 + ghost) / (dr * dr),
                (line[1] - ghost) / (2.0 * dr),
            )
        } else if i + 1 < n {
            (
                (line[i + 1] - line[i] * 2.0 + line[i - 1]) / (dr * dr),
                (line[i + 1] - line[i - 1]) / (2.0 * dr),
            )
        } else {
            // 4-point one-sided closures at the rim
            let mut d2 = Complex64::new(0.0, 0.0);
            let mut d1 = Complex64::new(0.0, 0.0);
            for t in 0..4 {
                d2 += line[n - 4 + t] * w2_end[t];
                d1 += line[n - 4 + t] * w1_end[t];
            }
            (d2 / (dr * dr), d1 / dr)
        };
        out[i] = d2 + d1 / r - line[i] * (mm / (r * r));
    }
}

/// 2nd-order vertical second derivative of one z line (4-point one-sided
/// closures at both surfaces).
fn vertical_second_difference(line: &[Complex64], dz: f64, w2_lo: &[f64], w2_hi: &[f64]) -> Vec<Complex64> {
    let n = line.len();
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        out[k] = if k == 0 {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..4 {
                acc += line[t] * w2_lo[t];
            }
            acc / (dz * dz)
        } else if k + 1 < n {
            (line[k + 1] - line[k] * 2.0 + line[k - 1]) / (dz * dz)
        } else {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..4 {
                acc += line[n - 4 + t] * w2_hi[t];
            }
            acc / (dz * dz)
        };
    }
    out
}

/// Discrete Laplacian (horizontal polar + vertical) of a volume field.
pub fn laplacian_volume(u: &ScalarField3D) -> ScalarField3D {
    let grid = u.grid.clone();
    let (n_r, n_z) = (grid.n_r, grid.n_z);
    let stack = to_modes(u);
    let mut out = crate::geometry::ModeStack::zeros(&grid);
    let w2_rim = fd_weights_uniform(3.0, 0, 4, 2);
    let w1_rim = fd_weights_uniform(3.0, 0, 4, 1);
    let w2_lo = fd_weights_uniform(0.0, 0, 4, 2);
    let w2_hi = fd_weights_uniform(3.0, 0, 4, 2);
    let mut horiz = alloc::vec![Complex64::new(0.0, 0.0); n_r];
    let mut zline = alloc::vec![Complex64::new(0.0, 0.0); n_z];
    for m in 0..grid.n_modes() {
        for k in 0..n_z {
            let base = k * n_r;
            let line = &stack.mode(m)[base..base + n_r];
            horizontal_mode_laplacian(line, m, &grid, &w1_rim, &w2_rim, &mut horiz);
            out.mode_mut(m)[base..base + n_r].copy_from_slice(&horiz);
        }
        for i in 0..n_r {
            for k in 0..n_z {
                zline[k] = stack.mode(m)[k * n_r + i];
            }
            let d2 = vertical_second_difference(&zline, grid.dz, &w2_lo, &w2_hi);
            let dst = out.mode_mut(m);
            for k in 0..n_z {
                dst[k * n_r + i] += d2[k];
            }
        }
    }
    from_modes(&out)
}

/// Discrete horizontal Laplacian of a surface field.
pub fn laplacian_surface(g: &SurfaceField) -> SurfaceField {
    let grid = g.grid.clone();
    let n_r = grid.n_r;
    let modes = surface_to_modes(g);
    let mut out = modes.clone();
    let w2_rim = fd_weights_uniform(3.0, 0, 4, 2);
    let w1_rim = fd_weights_uniform(3.0, 0, 4, 1);
    let mut horiz = alloc::vec![Complex64::new(0.0, 0.0); n_r];
    for m in 0..grid.n_modes() {
        let line: Vec<Complex64> = (0..n_r).map(|i| modes.at(i, m)).collect();
        horizontal_mode_laplacian(&line, m, &grid, &w1_rim, &w2_rim, &mut horiz);
        out.values[m * n_r..(m + 1) * n_r].copy_from_slice(&horiz);
    }
    surface_from_modes(&grid, g.surface, &out)
}

/// H⁴-strength proxy of a volume field.
pub fn h4_proxy_volume(u: &ScalarField3D) -> f64 {
    let d1 = laplacian_volume(u);
    let d2 = laplacian_volume(&d1);
    let (a, b, c) = (u.l2_norm(), d1.l2_norm(), d2.l2_norm());
    math::sqrt(a * a + b * b + c * c)
}

/// H⁴-strength proxy of a surface field.
pub fn h4_proxy_surface(g: &SurfaceField) -> f64 {
    let d1 = laplacian_surface(g);
    let d2 = laplacian_surface(&d1);
    let (a, b, c) = (g.l2_norm(), d1.l2_norm(), d2.l2_norm());
    math::sqrt(a * a + b * b + c * c)
}

/// Second difference of a z-profile (4-point one-sided ends).
fn line_second_difference(j: &[f64], dz: f64) -> Vec<f64> {
    let n = j.len();
    let w_lo = fd_weights_uniform(0.0, 0, 4, 2);
    let w_hi = fd_weights_uniform(3.0, 0, 4, 2);
    let mut out = alloc::vec![0.0; n];
    for k in 0..n {
        out[k] = if k == 0 {
            (0..4).map(|t| w_lo[t] * j[t]).sum::<f64>() / (dz * dz)
        } else if k + 1 < n {
            (j[k + 1] - 2.0 * j[k] + j[k - 1]) / (dz * dz)
        } else {
            (0..4).map(|t| w_hi[t] * j[n - 4 + t]).sum::<f64>() / (dz * dz)
        };
    }
    out
}

fn line_l2(j: &[f64], grid: &CylGrid) -> f64 {
    let mut acc = 0.0;
    for (v, w) in j.iter().zip(&grid.quad_weights_zline) {
        acc += v * v * w;
    }
    math::sqrt(acc)
}

/// H⁴-strength proxy of the lateral-flux profile.
pub fn h4_proxy_line(j: &[f64], grid: &CylGrid) -> f64 {
    assert_eq!(j.len(), grid.n_z, "profile length mismatch");
    let d1 = line_second_difference(j, grid.dz);
    let d2 = line_second_difference(&d1, grid.dz);
    let (a, b, c) = (line_l2(j, grid), line_l2(&d1, grid), line_l2(&d2, grid));
    math::sqrt(a * a + b * b + c * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, Surface};
    use alloc::sync::Arc;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplacian_is_exact_on_low_degree_fields() {
        let g = Arc::new(make_grid(16, 16, 8, 2.0).unwrap());
        // Δ(1 − r²) = −4, exactly reproduced by second differences
        let u = ScalarField3D::from_fn(&g, |r, _, _| 1.0 - r * r);
        let lap = laplacian_volume(&u);
        for v in &lap.values {
            assert_abs_diff_eq!(*v, -4.0, epsilon = 1e-9);
        }
        // Δx = 0, including at the axis (parity ghosts) and the rim
        let x = ScalarField3D::from_fn(&g, |r, th, _| r * crate::math::cos(th));
        let lap = laplacian_volume(&x);
        for v in &lap.values {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-9);
        }
        // Δ(z²) = 2 via the vertical part, exact for the one-sided closures
        let zq = ScalarField3D::from_fn(&g, |_, _, z| z * z);
        let lap = laplacian_volume(&zq);
        for v in &lap.values {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn surface_laplacian_matches_volume_plane() {
        let g = Arc::new(make_grid(16, 16, 8, 1.0).unwrap());
        let f2 = |r: f64, th: f64| r * r * crate::math::cos(2.0 * th) * (1.0 - r * r);
        let u = ScalarField3D::from_fn(&g, |r, th, _| f2(r, th));
        let gs = SurfaceField::from_fn(&g, Surface::Bottom, f2);
        let lap3 = laplacian_volume(&u);
        let lap2 = laplacian_surface(&gs);
        for j in 0..g.n_theta {
            for i in 0..g.n_r {
                assert_abs_diff_eq!(lap2.at(i, j), lap3.at(i, j, 0), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn volume_proxy_matches_analytic_laplacians() {
        // f = (1 − r²)² cos(πz/h): Δf and Δ²f in closed form give an
        // independent route to the proxy value.
        let g = Arc::new(make_grid(48, 8, 48, 1.0).unwrap());
        let zeta = |z: f64| crate::math::cos(core::f64::consts::PI * z);
        let k2 = core::f64::consts::PI * core::f64::consts::PI;
        let phi = |r: f64| (1.0 - r * r) * (1.0 - r * r);
        let a = |r: f64| 16.0 * r * r - 8.0; // φ″ + φ′/r
        let f = ScalarField3D::from_fn(&g, |r, _, z| phi(r) * zeta(z));
        let lap_exact = ScalarField3D::from_fn(&g, |r, _, z| {
            (a(r) - k2 * phi(r)) * zeta(z)
        });
        let lap2_exact = ScalarField3D::from_fn(&g, |r, _, z| {
            (64.0 - 2.0 * k2 * a(r) + k2 * k2 * phi(r)) * zeta(z)
        });
        let direct = {
            let (x, y, w) = (f.l2_norm(), lap_exact.l2_norm(), lap2_exact.l2_norm());
            crate::math::sqrt(x * x + y * y + w * w)
        };
        let proxy = h4_proxy_volume(&f);
        assert!(
            (proxy - direct).abs() <= 5e-2 * direct,
            "proxy {proxy} vs analytic {direct}"
        );
    }

    #[test]
    fn mode_two_proxy_matches_analytic_laplacians() {
        // f = r²(1 − r²)² cos 2θ · cos(πz/h) exercises the −m²/r² term
        let g = Arc::new(make_grid(48, 16, 48, 1.0).unwrap());
        let pi = core::f64::consts::PI;
        let k2 = pi * pi;
        let phi = |r: f64| r * r * (1.0 - r * r) * (1.0 - r * r);
        let b = |r: f64| 32.0 * r * r * r * r - 24.0 * r * r; // radial m=2 operator of φ
        let f = ScalarField3D::from_fn(&g, |r, th, z| {
            phi(r) * crate::math::cos(2.0 * th) * crate::math::cos(pi * z)
        });
        let lap_exact = ScalarField3D::from_fn(&g, |r, th, z| {
            (b(r) - k2 * phi(r)) * crate::math::cos(2.0 * th) * crate::math::cos(pi * z)
        });
        let lap2_exact = ScalarField3D::from_fn(&g, |r, th, z| {
            (384.0 * r * r - 2.0 * k2 * b(r) + k2 * k2 * phi(r))
                * crate::math::cos(2.0 * th)
                * crate::math::cos(pi * z)
        });
        let direct = {
            let (x, y, w) = (f.l2_norm(), lap_exact.l2_norm(), lap2_exact.l2_norm());
            crate::math::sqrt(x * x + y * y + w * w)
        };
        let proxy = h4_proxy_volume(&f);
        assert!(
            (proxy - direct).abs() <= 5e-2 * direct,
            "proxy {proxy} vs analytic {direct}"
        );
    }

    #[test]
    fn line_proxy_handles_constants_and_scaling() {
        let g = Arc::new(make_grid(8, 8, 32, 2.0).unwrap());
        // constant profile: proxy = c·√h exactly (second differences vanish)
        let j = alloc::vec![0.75; g.n_z];
        assert_abs_diff_eq!(
            h4_proxy_line(&j, &g),
            0.75 * crate::math::sqrt(2.0),
            epsilon = 1e-12
        );
        // exact homogeneity
        let j2: alloc::vec::Vec<f64> =
            g.z_nodes.iter().map(|z| z * z * (2.0 - z)).collect();
        let doubled: alloc::vec::Vec<f64> = j2.iter().map(|v| 2.0 * v).collect();
        assert_abs_diff_eq!(
            h4_proxy_line(&doubled, &g),
            2.0 * h4_proxy_line(&j2, &g),
            epsilon = 1e-12
        );
    }
}
