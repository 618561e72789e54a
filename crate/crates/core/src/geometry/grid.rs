//! Grid construction and quadrature weights.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::math;

/// Tensor grid on the cylinder (unit disk) × [0, h].
///
/// Radial nodes: `r_i = (i + 1/2)·dr` with `dr = 2/(2·n_r − 1)`, so the
/// first node sits half a cell off the axis and the last node is exactly
/// `r = 1`. Radial quadrature weights are the exact measures `∫ r dr` of
/// the cells `[i·dr, (i+1)·dr]` (midpoint nodes) and of the trailing half
/// cell `[1 − dr/2, 1]` (boundary node), so constants integrate exactly.
///
/// Angular nodes: `θ_j = j·2π/n_theta` (periodic rectangle rule).
/// Vertical nodes: `z_k = k·h/(n_z − 1)` with trapezoid weights, which
/// coincide with the finite-volume cell widths used by the elliptic solver.
///
/// All integrals over this grid are accumulated sequentially in index order
/// (r fastest, then θ, then z) so results are bitwise reproducible.
#[derive(Debug, Clone)]
pub struct CylGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_z: usize,
    pub h: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub dz: f64,
    pub r_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
    /// Radial cell measures `∫_cell r dr`; sums to 1/2.
    pub quad_r: Vec<f64>,
    /// Vertical trapezoid weights (= FV cell widths); sums to h.
    pub quad_weights_zline: Vec<f64>,
    /// Volume weights, layout (r fastest, θ, z); sums to π·h.
    pub quad_weights_volume: Vec<f64>,
    /// Disk weights, layout (r fastest, θ); sums to π.
    pub quad_weights_disk: Vec<f64>,
    /// Circle-average weights at r = 1 (each 1/n_theta; sums to 1).
    pub quad_weights_circle: Vec<f64>,
    /// cos(2π j / n_theta) with exact values at the quarter angles.
    pub(crate) trig_cos: Vec<f64>,
    /// sin(2π j / n_theta) with exact values at the quarter angles.
    pub(crate) trig_sin: Vec<f64>,
}

/// Grid construction failures.
#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Node counts below what the widest stencil in the crate supports.
    TooCoarse { axis: &'static str, min: usize, got: usize },
    /// n_theta must be even so the Nyquist mode is well defined.
    OddTheta { got: usize },
    /// Height must be positive and finite.
    BadHeight { got: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooCoarse { axis, min, got } => {
                write!(f, "grid too coarse along {axis}: need at least {min} nodes, got {got}")
            }
            GridError::OddTheta { got } => {
                write!(f, "n_theta must be even, got {got}")
            }
            GridError::BadHeight { got } => {
                write!(f, "cylinder height must be positive and finite, got {got}")
            }
        }
    }
}

impl core::error::Error for GridError {}

/// Builds the cylinder grid and its quadrature weights.
pub fn make_grid(n_r: usize, n_theta: usize, n_z: usize, h: f64) -> Result<CylGrid, GridError> {
    // The 5-point one-sided stencils (velocity, surface traces, flatness
    // checks) need at least 6 nodes along r and z; θ needs 4 for the cubic
    // interpolation stencil.
    if n_r < 6 {
        return Err(GridError::TooCoarse { axis: "r", min: 6, got: n_r });
    }
    if n_z < 6 {
        return Err(GridError::TooCoarse { axis: "z", min: 6, got: n_z });
    }
    if n_theta < 4 {
        return Err(GridError::TooCoarse { axis: "theta", min: 4, got: n_theta });
    }
    if n_theta % 2 != 0 {
        return Err(GridError::OddTheta { got: n_theta });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(GridError::BadHeight { got: h });
    }

    let dr = 2.0 / (2.0 * n_r as f64 - 1.0);
    let dtheta = 2.0 * PI / n_theta as f64;
    let dz = h / (n_z as f64 - 1.0);

    let mut r_nodes: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
    r_nodes[n_r - 1] = 1.0; // exact boundary node, independent of rounding
    let theta_nodes: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();
    let mut z_nodes: Vec<f64> = (0..n_z).map(|k| k as f64 * dz).collect();
    z_nodes[n_z - 1] = h;

    // Exact radial cell measures: full cells have midpoint nodes, the
    // boundary node carries the half cell [1 - dr/2, 1].
    let mut quad_r: Vec<f64> = (0..n_r).map(|i| r_nodes[i] * dr).collect();
    quad_r[n_r - 1] = 0.5 * dr - dr * dr / 8.0;

    let mut quad_weights_zline = alloc::vec![dz; n_z];
    quad_weights_zline[0] = 0.5 * dz;
    quad_weights_zline[n_z - 1] = 0.5 * dz;

    let mut quad_weights_volume = Vec::with_capacity(n_r * n_theta * n_z);
    for k in 0..n_z {
        for _j in 0..n_theta {
            for i in 0..n_r {
                quad_weights_volume.push(quad_r[i] * dtheta * quad_weights_zline[k]);
            }
        }
    }
    let mut quad_weights_disk = Vec::with_capacity(n_r * n_theta);
    for _j in 0..n_theta {
        for i in 0..n_r {
            quad_weights_disk.push(quad_r[i] * dtheta);
        }
    }
    let quad_weights_circle = alloc::vec![1.0 / n_theta as f64; n_theta];

    // Base trig tables for the azimuthal transform: cos/sin(mθ_j) is read
    // off as table[(m·j) mod n_theta], which keeps the symmetries of the
    // discrete transform exact. Quarter-angle entries are pinned to their
    // exact values so mode sums of pure harmonics cancel to the last bit.
    let mut trig_cos = Vec::with_capacity(n_theta);
    let mut trig_sin = Vec::with_capacity(n_theta);
    for j in 0..n_theta {
        let ang = 2.0 * PI * j as f64 / n_theta as f64;
        let (mut c, mut s) = (math::cos(ang), math::sin(ang));
        if j == 0 {
            c = 1.0;
            s = 0.0;
        }
        if 2 * j == n_theta {
            c = -1.0;
            s = 0.0;
        }
        if 4 * j == n_theta {
            c = 0.0;
            s = 1.0;
        }
        if 4 * j == 3 * n_theta {
            c = 0.0;
            s = -1.0;
        }
        trig_cos.push(c);
        trig_sin.push(s);
    }

    Ok(CylGrid {
        n_r,
        n_theta,
        n_z,
        h,
        dr,
        dtheta,
        dz,
        r_nodes,
        theta_nodes,
        z_nodes,
        quad_r,
        quad_weights_zline,
        quad_weights_volume,
        quad_weights_disk,
        quad_weights_circle,
        trig_cos,
        trig_sin,
    })
}

impl CylGrid {
    /// Number of retained azimuthal modes (m = 0 ..= n_theta/2).
    pub fn n_modes(&self) -> usize {
        self.n_theta / 2 + 1
    }

    /// Flat index into (r fastest, θ, z) volume storage.
    #[inline]
    pub fn idx3(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n_theta + j) * self.n_r + i
    }

    /// Flat index into (r fastest, θ) surface storage.
    #[inline]
    pub fn idx2(&self, i: usize, j: usize) -> usize {
        j * self.n_r + i
    }

    /// Volume integral of nodal values, fixed summation order.
    pub fn integral_volume(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.quad_weights_volume.len(), "volume shape mismatch");
        let mut acc = 0.0;
        for (v, w) in values.iter().zip(&self.quad_weights_volume) {
            acc += v * w;
        }
        acc
    }

    /// Disk integral of nodal surface values, fixed summation order.
    pub fn integral_disk(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.quad_weights_disk.len(), "disk shape mismatch");
        let mut acc = 0.0;
        for (v, w) in values.iter().zip(&self.quad_weights_disk) {
            acc += v * w;
        }
        acc
    }

    /// Line integral along z of nodal values, fixed summation order.
    pub fn integral_zline(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_z, "z-line shape mismatch");
        let mut acc = 0.0;
        for (v, w) in values.iter().zip(&self.quad_weights_zline) {
            acc += v * w;
        }
        acc
    }

    /// Smallest horizontal spacing relevant to the advective CFL bound:
    /// min(Δr, arc spacing at the lateral boundary). The near-axis arc
    /// length r₀·Δθ is deliberately excluded — the angular coordinate
    /// degenerates there and does not limit the semi-Lagrangian tracer
    /// (trajectories through the axis are handled by the parity extension
    /// of the interpolant).
    pub fn min_horizontal_spacing(&self) -> f64 {
        if self.dr < self.dtheta {
            self.dr
        } else {
            self.dtheta
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_grid(3, 16, 16, 1.0), Err(GridError::TooCoarse { .. })));
        assert!(matches!(make_grid(16, 15, 16, 1.0), Err(GridError::OddTheta { .. })));
        assert!(matches!(make_grid(16, 16, 16, -1.0), Err(GridError::BadHeight { .. })));
        assert!(matches!(make_grid(16, 16, 16, f64::NAN), Err(GridError::BadHeight { .. })));
    }

    #[test]
    fn nodes_cover_domain() {
        let g = make_grid(17, 12, 9, 2.5).unwrap();
        assert!(g.r_nodes[0] > 0.0);
        assert_eq!(g.r_nodes[g.n_r - 1], 1.0);
        assert_eq!(g.z_nodes[0], 0.0);
        assert_eq!(g.z_nodes[g.n_z - 1], 2.5);
        for w in &g.r_nodes {
            assert!(w.is_finite());
        }
        // strictly increasing radial nodes
        for i in 1..g.n_r {
            assert!(g.r_nodes[i] > g.r_nodes[i - 1]);
        }
    }

    #[test]
    fn constant_integrates_to_cylinder_volume() {
        // Volume of (unit disk) × [0, h] is π·h; the weights must reproduce
        // it to near machine precision by construction.
        for (nr, nt, nz, h) in [(16, 16, 16, 1.0), (32, 32, 16, 2.0), (7, 10, 11, 0.3)] {
            let g = make_grid(nr, nt, nz, h).unwrap();
            let ones = alloc::vec![1.0; nr * nt * nz];
            let vol = g.integral_volume(&ones);
            let exact = core::f64::consts::PI * h;
            assert!(
                (vol - exact).abs() <= 1e-12 * exact,
                "volume {vol} vs {exact}"
            );
        }
    }

    #[test]
    fn linear_z_integrates_exactly() {
        // ∫ z over the cylinder = π·h²/2; with h = 2 that is 2π. The
        // integrand is constant in r and linear in z, so midpoint-in-r and
        // trapezoid-in-z are both exact up to rounding.
        let g = make_grid(32, 32, 16, 2.0).unwrap();
        let mut vals = alloc::vec![0.0; 32 * 32 * 16];
        for k in 0..16 {
            for j in 0..32 {
                for i in 0..32 {
                    vals[g.idx3(i, j, k)] = g.z_nodes[k];
                }
            }
        }
        let exact = 2.0 * core::f64::consts::PI;
        assert!((g.integral_volume(&vals) - exact).abs() <= 1e-10);
    }

    #[test]
    fn quadratic_r_integral_is_second_order() {
        // ∫ r² over the disk (times height 1) = 2π/4 · h. Midpoint-in-r is
        // second order for this integrand; check the error shrinks 4× per
        // radial refinement.
        let exact = core::f64::consts::PI / 2.0;
        let mut errs = alloc::vec![];
        for nr in [16usize, 32, 64] {
            let g = make_grid(nr, 8, 6, 1.0).unwrap();
            let mut vals = alloc::vec![0.0; nr * 8 * 6];
            for k in 0..6 {
                for j in 0..8 {
                    for i in 0..nr {
                        vals[g.idx3(i, j, k)] = g.r_nodes[i] * g.r_nodes[i];
                    }
                }
            }
            errs.push((g.integral_volume(&vals) - exact).abs());
        }
        assert!(errs[1] < errs[0] / 3.0, "errors {errs:?}");
        assert!(errs[2] < errs[1] / 3.0, "errors {errs:?}");
    }

    #[test]
    fn zline_weights_sum_to_height() {
        let g = make_grid(8, 8, 23, 1.7).unwrap();
        let s: f64 = g.quad_weights_zline.iter().sum();
        assert!((s - 1.7).abs() < 1e-14);
    }
}
