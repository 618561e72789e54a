//! Bessel functions of the first kind and the disk's Dirichlet spectrum.
//!
//! J_m is evaluated through its integral representation
//! J_m(x) = (1/π)∫₀^π cos(mτ − x·sin τ) dτ with the composite trapezoid
//! rule; the integrand extends to a smooth even 2π-periodic function, so
//! the rule converges spectrally and stays accurate for the moderate
//! orders and arguments the disk spectrum needs (no power-series
//! cancellation at large x). Zeros come from a coarse scan plus bisection:
//! slow but foolproof, and they are computed once per spectrum.

use alloc::vec::Vec;

use crate::math;

/// Quadrature nodes for the integral representation. 256 points hold
/// J_m to ~1e-14 for m ≤ 24, x ≤ 120.
const QUAD_NODES: usize = 256;

/// J_m(x) for integer order m ≥ 0.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let n = QUAD_NODES;
    let dt = pi / n as f64;
    // trapezoid with explicit endpoint halving
    let f = |tau: f64| math::cos(m as f64 * tau - x * math::sin(tau));
    let mut acc = 0.5 * (f(0.0) + f(pi));
    for t in 1..n {
        acc += f(t as f64 * dt);
    }
    acc * dt / pi
}

/// d/dx J_m(x) from the recurrence J_m' = (J_{m−1} − J_{m+1})/2 (and
/// J_0' = −J_1).
pub fn bessel_j_prime(m: usize, x: f64) -> f64 {
    if m == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))
    }
}

/// First `count` positive zeros of J_m, ascending.
pub fn bessel_j_zeros(m: usize, count: usize) -> Vec<f64> {
    let mut zeros = Vec::with_capacity(count);
    // the first zero exceeds m; successive zeros are ~π apart, so a 0.2
    // scan step cannot skip a sign change
    let mut x = (m as f64).max(0.5);
    let step = 0.2;
    let mut prev = bessel_j(m, x);
    while zeros.len() < count {
        let next_x = x + step;
        let next = bessel_j(m, next_x);
        if prev == 0.0 {
            zeros.push(x);
        } else if prev * next < 0.0 {
            let (mut lo, mut hi) = (x, next_x);
            let mut flo = prev;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = bessel_j(m, mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        x = next_x;
        prev = next;
    }
    zeros
}

/// Dirichlet eigenpairs of −Δ on the unit disk: eigenvalues j_{m,l}² with
/// eigenfunctions J_m(j_{m,l}·r)·{cos, sin}(mθ).
#[derive(Debug, Clone)]
pub struct DiskSpectrum {
    pub m_max: usize,
    pub l_max: usize,
    /// zeros[m][l−1] = j_{m,l}.
    pub zeros: Vec<Vec<f64>>,
}

impl DiskSpectrum {
    pub fn new(m_max: usize, l_max: usize) -> Self {
        assert!(l_max >= 1);
        let zeros = (0..=m_max).map(|m| bessel_j_zeros(m, l_max)).collect();
        DiskSpectrum { m_max, l_max, zeros }
    }

    pub fn eigenvalue(&self, m: usize, l: usize) -> f64 {
        let j = self.zeros[m][l - 1];
        j * j
    }

    /// Radial factor J_m(j_{m,l}·r).
    pub fn radial(&self, m: usize, l: usize, r: f64) -> f64 {
        bessel_j(m, self.zeros[m][l - 1] * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn known_values_and_zeros_are_reproduced() {
        // J_0(0) = 1, J_1(0) = 0; first zeros from tables
        assert_abs_diff_eq!(bessel_j(0, 0.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(1, 0.0), 0.0, epsilon = 1e-14);
        let z0 = bessel_j_zeros(0, 3);
        assert_abs_diff_eq!(z0[0], 2.404825557695773, epsilon = 1e-10);
        assert_abs_diff_eq!(z0[1], 5.520078110286311, epsilon = 1e-10);
        assert_abs_diff_eq!(z0[2], 8.653727912911013, epsilon = 1e-10);
        let z1 = bessel_j_zeros(1, 1);
        assert_abs_diff_eq!(z1[0], 3.8317059702075125, epsilon = 1e-10);
    }

    #[test]
    fn integral_representation_satisfies_the_bessel_equation() {
        // x²J'' + xJ' + (x² − m²)J = 0, with J'' from the recurrence
        // J_m'' = ((J_{m−2} − J_m) − (J_m − J_{m+2}))/4 for m ≥ 2
        for (m, x) in [(2usize, 1.7), (3, 9.4), (5, 23.0), (8, 41.5)] {
            let j = bessel_j(m, x);
            let jp = bessel_j_prime(m, x);
            let jpp =
                0.25 * (bessel_j(m - 2, x) - 2.0 * bessel_j(m, x) + bessel_j(m + 2, x));
            let residual = x * x * jpp + x * jp + (x * x - (m * m) as f64) * j;
            assert!(residual.abs() <= 1e-11 * (1.0 + x * x), "m={m} x={x}: {residual}");
        }
    }

    #[test]
    fn large_argument_matches_the_asymptotic_form() {
        // J_m(x) ≈ √(2/(πx))·cos(x − mπ/2 − π/4) for x ≫ m²
        let pi = core::f64::consts::PI;
        for m in [0usize, 1, 2] {
            let x = 80.0;
            let asym = (2.0 / (pi * x)).sqrt()
                * (x - m as f64 * pi / 2.0 - pi / 4.0).cos();
            assert_abs_diff_eq!(bessel_j(m, x), asym, epsilon = 2e-3);
        }
    }

    #[test]
    fn radial_modes_are_orthogonal_in_the_weighted_integral() {
        // ∫₀¹ J_m(j_{m,a}r) J_m(j_{m,b}r) r dr = δ_ab · J_{m+1}(j_{m,a})²/2
        let spec = DiskSpectrum::new(2, 3);
        let n = 4000;
        for m in 0..=2usize {
            for a in 1..=3usize {
                for b in a..=3usize {
                    let mut acc = 0.0;
                    for t in 0..n {
                        let r = (t as f64 + 0.5) / n as f64;
                        acc += spec.radial(m, a, r) * spec.radial(m, b, r) * r / n as f64;
                    }
                    if a == b {
                        let want = 0.5 * bessel_j(m + 1, spec.zeros[m][a - 1]).powi(2);
                        assert_abs_diff_eq!(acc, want, epsilon = 1e-6);
                    } else {
                        assert!(acc.abs() <= 1e-6, "m={m} ({a},{b}): {acc}");
                    }
                }
            }
        }
    }
}
