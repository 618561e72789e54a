//! Finite-difference weight generation for arbitrary node sets
//! (Fornberg's recurrence).
//!
//! One generator instead of hardcoded tables: every one-sided or centered
//! stencil in the crate (surface traces, endpoint flatness checks, velocity
//! differentiation) is produced here and validated against polynomials.

use alloc::vec::Vec;

/// Weights w such that Σ w_i f(x_i) ≈ f^(m)(x0).
///
/// Exact for polynomials of degree ≤ len(xs) − 1, so a stencil of n nodes
/// gives order n − m accuracy on smooth functions.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(m < n, "need more nodes than the derivative order");
    // c[k][i]: weight of node i for the k-th derivative, built incrementally.
    let mut c = alloc::vec![alloc::vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=m.min(i)).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=m.min(i)).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.pop().unwrap()
}

/// Weights for the m-th derivative at uniform nodes `start·Δ, …`, taking
/// the derivative at node offset `at` (in units of Δ); weights are returned
/// scaled for unit spacing, so divide the combination by Δ^m.
pub fn fd_weights_uniform(at: f64, start: i64, n: usize, m: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..n).map(|i| (start + i as i64) as f64).collect();
    fd_weights(at, &xs, m)
}
