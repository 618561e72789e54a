//! Scalar fields on the cylinder grid and on its two horizontal surfaces.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::grid::CylGrid;

/// Which horizontal surface of the cylinder a quantity lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Bottom,
    Top,
}

impl Surface {
    /// Vertical node index of the surface.
    pub fn z_index(self, grid: &CylGrid) -> usize {
        match self {
            Surface::Bottom => 0,
            Surface::Top => grid.n_z - 1,
        }
    }

    /// Vertical coordinate of the surface.
    pub fn z_value(self, grid: &CylGrid) -> f64 {
        match self {
            Surface::Bottom => 0.0,
            Surface::Top => grid.h,
        }
    }

    /// Sign of the outward normal relative to +z (−1 at the bottom, +1 at
    /// the top); normal derivatives follow this convention everywhere.
    pub fn outward_sign(self) -> f64 {
        match self {
            Surface::Bottom => -1.0,
            Surface::Top => 1.0,
        }
    }
}

/// Nodal scalar field on the full cylinder, storage (r fastest, θ, z).
#[derive(Debug, Clone)]
pub struct ScalarField3D {
    pub grid: Arc<CylGrid>,
    pub values: Vec<f64>,
}

impl ScalarField3D {
    pub fn zeros(grid: &Arc<CylGrid>) -> Self {
        ScalarField3D {
            grid: grid.clone(),
            values: alloc::vec![0.0; grid.n_r * grid.n_theta * grid.n_z],
        }
    }

    /// Samples `f(r, θ, z)` at every node.
    pub fn from_fn(grid: &Arc<CylGrid>, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_r * grid.n_theta * grid.n_z);
        for k in 0..grid.n_z {
            for j in 0..grid.n_theta {
                for i in 0..grid.n_r {
                    values.push(f(grid.r_nodes[i], grid.theta_nodes[j], grid.z_nodes[k]));
                }
            }
        }
        ScalarField3D { grid: grid.clone(), values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx3(i, j, k)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut f64 {
        let idx = self.grid.idx3(i, j, k);
        &mut self.values[idx]
    }

    /// Volume integral with the grid quadrature.
    pub fn integral(&self) -> f64 {
        self.grid.integral_volume(&self.values)
    }

    /// Volume-weighted L² norm.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (v, w) in self.values.iter().zip(&self.grid.quad_weights_volume) {
            acc += v * v * w;
        }
        crate::math::sqrt(acc)
    }

    /// Max-norm over all nodes.
    pub fn linf_norm(&self) -> f64 {
        let mut m = 0.0;
        for v in &self.values {
            let a = crate::math::abs(*v);
            if a > m {
                m = a;
            }
        }
        m
    }

    /// self ← self + c·other (shapes must match).
    pub fn axpy(&mut self, c: f64, other: &ScalarField3D) {
        assert_eq!(self.values.len(), other.values.len(), "field shape mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in self.values.iter_mut() {
            *a *= c;
        }
    }

    /// Adds a constant to every node.
    pub fn shift(&mut self, c: f64) {
        for a in self.values.iter_mut() {
            *a += c;
        }
    }

    /// Contiguous (θ, r) plane at vertical level k.
    pub fn plane(&self, k: usize) -> &[f64] {
        let n = self.grid.n_r * self.grid.n_theta;
        &self.values[k * n..(k + 1) * n]
    }
}

/// Nodal scalar field on one horizontal surface, storage (r fastest, θ).
#[derive(Debug, Clone)]
pub struct SurfaceField {
    pub grid: Arc<CylGrid>,
    pub surface: Surface,
    pub values: Vec<f64>,
}

impl SurfaceField {
    pub fn zeros(grid: &Arc<CylGrid>, surface: Surface) -> Self {
        SurfaceField {
            grid: grid.clone(),
            surface,
            values: alloc::vec![0.0; grid.n_r * grid.n_theta],
        }
    }

    /// Samples `f(r, θ)` at every surface node.
    pub fn from_fn(
        grid: &Arc<CylGrid>,
        surface: Surface,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(grid.n_r * grid.n_theta);
        for j in 0..grid.n_theta {
            for i in 0..grid.n_r {
                values.push(f(grid.r_nodes[i], grid.theta_nodes[j]));
            }
        }
        SurfaceField { grid: grid.clone(), surface, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx2(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let idx = self.grid.idx2(i, j);
        &mut self.values[idx]
    }

    /// Disk integral with the grid quadrature.
    pub fn integral(&self) -> f64 {
        self.grid.integral_disk(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (v, w) in self.values.iter().zip(&self.grid.quad_weights_disk) {
            acc += v * v * w;
        }
        crate::math::sqrt(acc)
    }

    pub fn linf_norm(&self) -> f64 {
        let mut m = 0.0;
        for v in &self.values {
            let a = crate::math::abs(*v);
            if a > m {
                m = a;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_grid;

    #[test]
    fn surface_integral_of_one_is_disk_area() {
        let g = Arc::new(make_grid(24, 16, 8, 1.0).unwrap());
        let s = SurfaceField::from_fn(&g, Surface::Bottom, |_, _| 1.0);
        assert!((s.integral() - core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn axpy_and_norms() {
        let g = Arc::new(make_grid(8, 8, 8, 1.0).unwrap());
        let mut a = ScalarField3D::from_fn(&g, |r, _, _| r);
        let b = ScalarField3D::from_fn(&g, |r, _, _| r);
        a.axpy(-1.0, &b);
        assert_eq!(a.linf_norm(), 0.0);
        assert_eq!(a.l2_norm(), 0.0);
    }
}
