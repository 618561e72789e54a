//! Commutator-estimate battery.
//!
//! For difference operators Dᵅ of total order s, products obey
//! ‖Dᵅ(fg) − f·Dᵅg‖₂ ≲ ‖∇f‖_∞‖∇^{s−1}g‖₂ + ‖g‖_∞‖∇ˢf‖₂ — the Leibniz
//! cancellation that lets the energy method close at high order. The
//! battery measures the best empirical constant on random smooth fields
//! and checks it stays bounded as the grid refines.
//!
//! The operators are plain coordinate divided differences (centered
//! interior, one-sided 4-point closures in r and z, periodic in θ). Each
//! acts along its own index axis, so they commute exactly and the
//! discrete Leibniz structure is genuine. No 1/r factors: the estimate is
//! an algebraic property of the operator family, and mixing in curvature
//! weights would destroy the commutation it relies on.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CylGrid, ScalarField3D};
use crate::math;
use crate::stencil::fd_weights_uniform;

/// One trial's worst ratio and where it occurred.
#[derive(Debug, Clone, Copy)]
pub struct CommutatorTrial {
    pub trial: usize,
    /// max over multi-indices |α| = s of ‖Dᵅ(fg) − fDᵅg‖₂ / RHS.
    pub ratio: f64,
}

/// Battery outcome at one resolution.
#[derive(Debug, Clone)]
pub struct CommutatorReport {
    pub s: usize,
    pub seed: u64,
    pub trials: Vec<CommutatorTrial>,
    pub max_ratio: f64,
}

/// First difference along one coordinate axis of the (r, θ, z) index box.
fn first_difference(values: &[f64], grid: &CylGrid, axis: usize, out: &mut [f64]) {
    let (n_r, n_t, n_z) = (grid.n_r, grid.n_theta, grid.n_z);
    let idx = |i: usize, j: usize, k: usize| (k * n_t + j) * n_r + i;
    let edge_lo = fd_weights_uniform(0.0, 0, 4, 1);
    let edge_hi = fd_weights_uniform(3.0, 0, 4, 1);
    match axis {
        0 => {
            for k in 0..n_z {
                for j in 0..n_t {
                    for i in 0..n_r {
                        let d = if i == 0 {
                            (0..4).map(|t| edge_lo[t] * values[idx(t, j, k)]).sum::<f64>()
                        } else if i == n_r - 1 {
                            (0..4)
                                .map(|t| edge_hi[t] * values[idx(n_r - 4 + t, j, k)])
                                .sum::<f64>()
                        } else {
                            0.5 * (values[idx(i + 1, j, k)] - values[idx(i - 1, j, k)])
                        };
                        out[idx(i, j, k)] = d / grid.dr;
                    }
                }
            }
        }
        1 => {
            for k in 0..n_z {
                for j in 0..n_t {
                    let jp = (j + 1) % n_t;
                    let jm = (j + n_t - 1) % n_t;
                    for i in 0..n_r {
                        out[idx(i, j, k)] =
                            0.5 * (values[idx(i, jp, k)] - values[idx(i, jm, k)]) / grid.dtheta;
                    }
                }
            }
        }
        _ => {
            for k in 0..n_z {
                for j in 0..n_t {
                    for i in 0..n_r {
                        let d = if k == 0 {
                            (0..4).map(|t| edge_lo[t] * values[idx(i, j, t)]).sum::<f64>()
                        } else if k == n_z - 1 {
                            (0..4)
                                .map(|t| edge_hi[t] * values[idx(i, j, n_z - 4 + t)])
                                .sum::<f64>()
                        } else {
                            0.5 * (values[idx(i, j, k + 1)] - values[idx(i, j, k - 1)])
                        };
                        out[idx(i, j, k)] = d / grid.dz;
                    }
                }
            }
        }
    }
}

/// D^α for α = (a_r, a_θ, a_z), applied as composed first differences.
fn apply_multi(values: &[f64], grid: &CylGrid, alpha: [usize; 3]) -> Vec<f64> {
    let mut cur = values.to_vec();
    let mut tmp = alloc::vec![0.0; values.len()];
    for (axis, &count) in alpha.iter().enumerate() {
        for _ in 0..count {
            first_difference(&cur, grid, axis, &mut tmp);
            core::mem::swap(&mut cur, &mut tmp);
        }
    }
    cur
}

fn weighted_l2(values: &[f64], grid: &CylGrid) -> f64 {
    let mut acc = 0.0;
    for (v, w) in values.iter().zip(grid.quad_weights_volume.iter()) {
        acc += w * v * v;
    }
    math::sqrt(acc)
}

fn linf(values: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for v in values {
        m = m.max(math::abs(*v));
    }
    m
}

fn multi_indices(s: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..=s {
        for b in 0..=(s - a) {
            out.push([a, b, s - a - b]);
        }
    }
    out
}

/// √(Σ_{|α|=s} ‖Dᵅu‖₂²): the s-th gradient strength under the family.
fn grad_s_l2(values: &[f64], grid: &CylGrid, s: usize) -> f64 {
    let mut acc = 0.0;
    for alpha in multi_indices(s) {
        let d = apply_multi(values, grid, alpha);
        let n = weighted_l2(&d, grid);
        acc += n * n;
    }
    math::sqrt(acc)
}

/// max over axes and nodes of |D_axis u|: the ∞ gradient strength.
fn grad_linf(values: &[f64], grid: &CylGrid) -> f64 {
    let mut m = 0.0f64;
    let mut tmp = alloc::vec![0.0; values.len()];
    for axis in 0..3 {
        first_difference(values, grid, axis, &mut tmp);
        m = m.max(linf(&tmp));
    }
    m
}

/// Random smooth band-limited field: a low-degree polynomial in (x, y, z)
/// with coefficients drawn from the seeded generator. Polynomials in
/// Cartesian coordinates are smooth across the axis by construction.
fn random_smooth(grid: &Arc<CylGrid>, rng: &mut ChaCha8Rng) -> ScalarField3D {
    let mut coeff = [[0.0f64; 10]; 3];
    for plane in coeff.iter_mut() {
        for c in plane.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    ScalarField3D::from_fn(grid, |r, th, z| {
        let x = r * math::cos(th);
        let y = r * math::sin(th);
        let zn = z / grid.h;
        let mut acc = 0.0;
        let mut zp = 1.0;
        for plane in coeff.iter() {
            let p = plane[0]
                + plane[1] * x
                + plane[2] * y
                + plane[3] * x * y
                + plane[4] * (x * x - y * y)
                + plane[5] * x * (x * x - 3.0 * y * y)
                + plane[6] * (x * x + y * y)
                + plane[7] * y * (3.0 * x * x - y * y)
                + plane[8] * x * (x * x + y * y)
                + plane[9] * (x * x + y * y) * (x * x + y * y);
            acc += p * zp;
            zp *= zn;
        }
        acc
    })
}

/// Worst commutator size ‖Dᵅ(fg) − fDᵅg‖₂ over |α| = s, together with
/// the estimate's right side for the same pair.
pub fn commutator_defect(f: &ScalarField3D, g: &ScalarField3D, s: usize) -> (f64, f64) {
    assert!((2..=4).contains(&s), "order s must be 2, 3, or 4");
    let grid = &*f.grid;
    let fg: Vec<f64> =
        f.values.iter().zip(g.values.iter()).map(|(a, b)| a * b).collect();
    let rhs = grad_linf(&f.values, grid) * grad_s_l2(&g.values, grid, s - 1)
        + linf(&g.values) * grad_s_l2(&f.values, grid, s);
    let mut worst = 0.0f64;
    for alpha in multi_indices(s) {
        let d_fg = apply_multi(&fg, grid, alpha);
        let d_g = apply_multi(&g.values, grid, alpha);
        let mut comm = d_fg;
        for (c, (fv, dg)) in comm.iter_mut().zip(f.values.iter().zip(d_g.iter())) {
            *c -= fv * dg;
        }
        worst = worst.max(weighted_l2(&comm, grid));
    }
    (worst, rhs)
}

/// The worst commutator ratio for one (f, g) pair at order s.
pub fn commutator_ratio(f: &ScalarField3D, g: &ScalarField3D, s: usize) -> f64 {
    let (lhs, rhs) = commutator_defect(f, g, s);
    if rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Runs the battery: `trials` random pairs at order `s`, reporting each
/// trial's worst ratio. Deterministic for a fixed seed.
pub fn commutator_check(
    grid: &Arc<CylGrid>,
    s: usize,
    trials: usize,
    seed: u64,
) -> CommutatorReport {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    let mut max_ratio = 0.0f64;
    for trial in 0..trials {
        let f = random_smooth(grid, &mut rng);
        let g = random_smooth(grid, &mut rng);
        let ratio = commutator_ratio(&f, &g, s);
        max_ratio = max_ratio.max(ratio);
        out.push(CommutatorTrial { trial, ratio });
    }
    CommutatorReport { s, seed, trials: out, max_ratio }
}
