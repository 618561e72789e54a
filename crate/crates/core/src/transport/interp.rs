//! Bicubic interpolation on a disk plane.
//!
//! Tensor-product cubic Lagrange on the (r,θ) grid: periodic wrap in θ,
//! and across the axis the radial stencil continues to "negative radius"
//! nodes, which are the same physical points at angle θ + π — the
//! half-cell-offset radial grid makes the virtual node positions
//! (q + ½)·dr uniform for any integer q, so one weight formula covers the
//! axis region. At the outer rim the stencil becomes one-sided so it never
//! reaches past r = 1.

use crate::geometry::{ScalarField3D, SurfaceField};

/// Cubic Lagrange weights on unit-spaced nodes {0,1,2,3} at position x.
#[inline]
pub(crate) fn cubic_weights(x: f64) -> [f64; 4] {
    let a = x - 1.0;
    let b = x - 2.0;
    let c = x - 3.0;
    [
        -a * b * c / 6.0,
        x * b * c / 2.0,
        -x * a * c / 2.0,
        x * a * b / 6.0,
    ]
}

/// One z-level of samples with the grid's plane layout (index j·n_r + i).
#[derive(Clone, Copy)]
pub struct PlaneSampler<'a> {
    values: &'a [f64],
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
}

impl<'a> PlaneSampler<'a> {
    pub fn new(values: &'a [f64], n_r: usize, n_theta: usize, dr: f64, dtheta: f64) -> Self {
        debug_assert_eq!(values.len(), n_r * n_theta);
        PlaneSampler { values, n_r, n_theta, dr, dtheta }
    }

    pub fn for_field(field: &'a ScalarField3D, k: usize) -> Self {
        let g = &field.grid;
        Self::new(field.plane(k), g.n_r, g.n_theta, g.dr, g.dtheta)
    }

    pub fn for_surface(field: &'a SurfaceField) -> Self {
        let g = &field.grid;
        Self::new(&field.values, g.n_r, g.n_theta, g.dr, g.dtheta)
    }

    /// Interpolates at polar coordinates (r, θ); r must lie in [0, 1].
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        // virtual radial node q sits at (q + ½)·dr
        let x = r / self.dr - 0.5;
        let q0 = (crate::math::floor(x) as isize - 1).clamp(-2, self.n_r as isize - 4);
        let wr = cubic_weights(x - q0 as f64);

        let tq = theta / self.dtheta;
        let j0 = crate::math::floor(tq) as isize - 1;
        let wt = cubic_weights(tq - j0 as f64);

        let half_turn = self.n_theta / 2;
        let mut acc = 0.0;
        for (a, wra) in wr.iter().enumerate() {
            let q = q0 + a as isize;
            // negative radius: same point at angle θ + π
            let (i, shift) = if q < 0 { ((-1 - q) as usize, half_turn) } else { (q as usize, 0) };
            let mut row = 0.0;
            for (b, wtb) in wt.iter().enumerate() {
                let j = (j0 + b as isize).rem_euclid(self.n_theta as isize) as usize;
                let j = (j + shift) % self.n_theta;
                row += wtb * self.values[j * self.n_r + i];
            }
            acc += wra * row;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, Surface};
    use alloc::sync::Arc;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cubic_weights_match_generic_generator() {
        for x in [0.0, 0.4, 1.0, 1.7, 2.2, 3.0] {
            let w = cubic_weights(x);
            let xs = [0.0, 1.0, 2.0, 3.0];
            let generic = crate::stencil::fd_weights(x, &xs, 0);
            for t in 0..4 {
                assert_abs_diff_eq!(w[t], generic[t], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn nodal_evaluation_is_exact() {
        let g = Arc::new(make_grid(16, 32, 6, 1.0).unwrap());
        let f = ScalarField3D::from_fn(&g, |r, th, z| r * f64::sin(th) + z * r * r);
        let s = PlaneSampler::for_field(&f, 3);
        for j in [0, 5, 17, 31] {
            for i in [0, 1, 7, 15] {
                let v = s.eval(g.r_nodes[i], g.theta_nodes[j]);
                assert_abs_diff_eq!(v, f.at(i, j, 3), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn smooth_field_interpolates_at_fourth_order() {
        // f(x, y) = sin(2x)·cos(y) + x·y² is smooth through the axis; the
        // interpolation error must drop by ~2⁴ per grid doubling.
        let f_xy = |x: f64, y: f64| f64::sin(2.0 * x) * f64::cos(y) + x * y * y;
        let probes = [
            (0.003, 1.1),
            (0.04, 4.0),
            (0.31, 2.2),
            (0.57, 0.01),
            (0.83, 5.9),
            (0.97, 3.3),
        ];
        let mut errs = alloc::vec::Vec::new();
        for n in [16usize, 32, 64] {
            let g = Arc::new(make_grid(n, 2 * n, 6, 1.0).unwrap());
            let f = ScalarField3D::from_fn(&g, |r, th, _| {
                f_xy(r * f64::cos(th), r * f64::sin(th))
            });
            let s = PlaneSampler::for_field(&f, 2);
            let mut worst = 0.0f64;
            for (r, th) in probes {
                let exact = f_xy(r * f64::cos(th), r * f64::sin(th));
                worst = worst.max((s.eval(r, th) - exact).abs());
            }
            errs.push(worst);
        }
        assert!(errs[1] <= errs[0] / 8.0, "refinement 16→32: {errs:?}");
        assert!(errs[2] <= errs[1] / 8.0, "refinement 32→64: {errs:?}");
        assert!(errs[2] <= 5e-6, "absolute accuracy on the fine grid: {errs:?}");
    }

    #[test]
    fn axis_crossing_is_consistent() {
        // near the axis the stencil reaches "negative radius"; the value
        // there must come from the θ + π column, keeping smooth fields
        // smooth across r = 0
        let g = Arc::new(make_grid(20, 40, 6, 1.0).unwrap());
        let f_xy = |x: f64, y: f64| x + 2.0 * y + x * x - y * x;
        let f = ScalarField3D::from_fn(&g, |r, th, _| f_xy(r * f64::cos(th), r * f64::sin(th)));
        let s = PlaneSampler::for_field(&f, 0);
        for th in [0.0, 0.7, 2.3, 4.4] {
            for r in [0.0, 1e-6, 0.005, 0.02] {
                let exact = f_xy(r * f64::cos(th), r * f64::sin(th));
                assert!(
                    (s.eval(r, th) - exact).abs() <= 2e-4,
                    "axis probe failed at r={r}, θ={th}"
                );
            }
        }
    }

    #[test]
    fn surface_sampler_matches_field_sampler() {
        let g = Arc::new(make_grid(12, 16, 6, 1.0).unwrap());
        let sf = SurfaceField::from_fn(&g, Surface::Bottom, |r, th| r * r + f64::cos(th));
        let s = PlaneSampler::for_surface(&sf);
        assert_abs_diff_eq!(
            s.eval(0.4, 1.0),
            {
                let f3 = ScalarField3D::from_fn(&g, |r, th, _| r * r + f64::cos(th));
                PlaneSampler::for_field(&f3, 0).eval(0.4, 1.0)
            },
            epsilon = 1e-14
        );
    }
}
