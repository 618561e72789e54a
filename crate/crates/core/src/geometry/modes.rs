//! Azimuthal mode transform (direct real DFT in θ).
//!
//! The forward transform divides by n_theta, so mode 0 is exactly the
//! rotational average of the signal. Retained modes are m = 0 ..= n_theta/2;
//! the m = 0 and Nyquist coefficients of a real signal are real (their
//! imaginary parts are exactly zero by the pinned trig tables).
//!
//! A direct O(n²) summation with precomputed tables is used instead of an
//! FFT: angular resolutions here are tiny, the summation order is fixed
//! (bit-reproducible), and the normalization is under explicit control.

use alloc::sync::Arc;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::fields::{ScalarField3D, SurfaceField};
use super::grid::CylGrid;

/// Azimuthal coefficients of a volume field, storage (r fastest, z, mode).
#[derive(Debug, Clone)]
pub struct ModeStack {
    pub grid: Arc<CylGrid>,
    pub values: Vec<Complex64>,
}

impl ModeStack {
    pub fn zeros(grid: &Arc<CylGrid>) -> Self {
        ModeStack {
            grid: grid.clone(),
            values: alloc::vec![Complex64::new(0.0, 0.0); grid.n_r * grid.n_z * grid.n_modes()],
        }
    }

    /// Flat index of (radial i, vertical k, mode m): per-mode (r, z) blocks
    /// are contiguous, which is what the per-mode elliptic solves want.
    #[inline]
    pub fn idx(&self, i: usize, k: usize, m: usize) -> usize {
        (m * self.grid.n_z + k) * self.grid.n_r + i
    }

    #[inline]
    pub fn at(&self, i: usize, k: usize, m: usize) -> Complex64 {
        self.values[self.idx(i, k, m)]
    }

    /// Contiguous (r, z) block of one mode.
    pub fn mode(&self, m: usize) -> &[Complex64] {
        let n = self.grid.n_r * self.grid.n_z;
        &self.values[m * n..(m + 1) * n]
    }

    pub fn mode_mut(&mut self, m: usize) -> &mut [Complex64] {
        let n = self.grid.n_r * self.grid.n_z;
        &mut self.values[m * n..(m + 1) * n]
    }
}

/// Azimuthal coefficients of a surface field, storage (r fastest, mode).
#[derive(Debug, Clone)]
pub struct SurfaceModes {
    pub n_r: usize,
    pub n_modes: usize,
    pub values: Vec<Complex64>,
}

impl SurfaceModes {
    #[inline]
    pub fn at(&self, i: usize, m: usize) -> Complex64 {
        self.values[m * self.n_r + i]
    }
}

#[inline]
fn wave(grid: &CylGrid, m: usize, j: usize) -> (f64, f64) {
    let idx = (m * j) % grid.n_theta;
    (grid.trig_cos[idx], grid.trig_sin[idx])
}

/// Forward transform of a volume field.
pub fn to_modes(field: &ScalarField3D) -> ModeStack {
    let grid = &field.grid;
    let (n_r, n_theta, n_z) = (grid.n_r, grid.n_theta, grid.n_z);
    let inv_n = 1.0 / n_theta as f64;
    let mut out = ModeStack::zeros(grid);
    for m in 0..grid.n_modes() {
        for k in 0..n_z {
            for i in 0..n_r {
                let mut re = 0.0;
                let mut im = 0.0;
                for j in 0..n_theta {
                    let v = field.values[grid.idx3(i, j, k)];
                    let (c, s) = wave(grid, m, j);
                    re += v * c;
                    im -= v * s;
                }
                let idx = out.idx(i, k, m);
                out.values[idx] = Complex64::new(re * inv_n, im * inv_n);
            }
        }
    }
    out
}

/// Inverse transform back to nodal values.
///
/// Interior modes are doubled (conjugate pair), the Nyquist mode is not.
/// Imaginary parts of the m = 0 and Nyquist coefficients are ignored (they
/// are zero for stacks produced by `to_modes`).
pub fn from_modes(stack: &ModeStack) -> ScalarField3D {
    let grid = &stack.grid;
    let (n_r, n_theta, n_z) = (grid.n_r, grid.n_theta, grid.n_z);
    let nyquist = n_theta / 2;
    let mut field = ScalarField3D::zeros(grid);
    for k in 0..n_z {
        for j in 0..n_theta {
            for i in 0..n_r {
                let mut v = stack.at(i, k, 0).re;
                for m in 1..nyquist {
                    let x = stack.at(i, k, m);
                    let (c, s) = wave(grid, m, j);
                    v += 2.0 * (x.re * c - x.im * s);
                }
                let (c, _) = wave(grid, nyquist, j);
                v += stack.at(i, k, nyquist).re * c;
                field.values[grid.idx3(i, j, k)] = v;
            }
        }
    }
    field
}

/// Inverse transform of surface-mode coefficients back to nodal values.
pub fn surface_from_modes(
    grid: &Arc<CylGrid>,
    surface: super::fields::Surface,
    modes: &SurfaceModes,
) -> SurfaceField {
    assert_eq!(modes.n_r, grid.n_r, "mode stack radial size mismatch");
    assert_eq!(modes.n_modes, grid.n_modes(), "mode count mismatch");
    let (n_r, n_theta) = (grid.n_r, grid.n_theta);
    let nyquist = n_theta / 2;
    let mut field = SurfaceField::zeros(grid, surface);
    for j in 0..n_theta {
        for i in 0..n_r {
            let mut v = modes.at(i, 0).re;
            for m in 1..nyquist {
                let x = modes.at(i, m);
                let (c, s) = wave(grid, m, j);
                v += 2.0 * (x.re * c - x.im * s);
            }
            let (c, _) = wave(grid, nyquist, j);
            v += modes.at(i, nyquist).re * c;
            field.values[grid.idx2(i, j)] = v;
        }
    }
    field
}

/// Forward transform of a surface field.
pub fn surface_to_modes(field: &SurfaceField) -> SurfaceModes {
    let grid = &field.grid;
    let (n_r, n_theta) = (grid.n_r, grid.n_theta);
    let inv_n = 1.0 / n_theta as f64;
    let n_modes = grid.n_modes();
    let mut values = alloc::vec![Complex64::new(0.0, 0.0); n_r * n_modes];
    for m in 0..n_modes {
        for i in 0..n_r {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..n_theta {
                let v = field.values[grid.idx2(i, j)];
                let (c, s) = wave(grid, m, j);
                re += v * c;
                im -= v * s;
            }
            values[m * n_r + i] = Complex64::new(re * inv_n, im * inv_n);
        }
    }
    SurfaceModes { n_r, n_modes, values }
}

/// Rotational average of a field on the lateral boundary circle at level k.
pub fn circle_average(field: &ScalarField3D, k: usize) -> f64 {
    let grid = &field.grid;
    let last = grid.n_r - 1;
    let mut acc = 0.0;
    for j in 0..grid.n_theta {
        acc += field.values[grid.idx3(last, j, k)] * grid.quad_weights_circle[j];
    }
    acc
}
