//! Banded LU factorization with partial pivoting.
//!
//! The per-mode elliptic systems are banded (bandwidth set by the radial
//! neighbor count), so a general sparse or dense solver would waste both
//! memory and time. Storage follows the classic band layout: column j keeps
//! rows j−ku..=j+kl, plus kl extra super-diagonals of headroom for the
//! fill-in that row pivoting pushes into U.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::math;

/// Real banded matrix, column-major band storage.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// lda × n with lda = 2·kl + ku + 1; A(i,j) lives at
    /// `ab[j · lda + (kl + ku + i − j)]`.
    ab: Vec<f64>,
}

/// Factorization failure: an exactly zero pivot column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularMatrix {
    pub column: usize,
}

impl fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "banded matrix is singular at column {}", self.column)
    }
}

impl core::error::Error for SingularMatrix {}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0, "empty system");
        assert!(kl < n && ku < n, "bandwidths must be below the dimension");
        let lda = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, ab: vec![0.0; lda * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn lda(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.lda() + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// The leading k×k principal submatrix with the same bandwidths
    /// (used to ground a singular pure-Neumann system by dropping its
    /// last row and column).
    pub fn leading_principal(&self, k: usize) -> BandedMatrix {
        assert!(k > self.kl && k > self.ku && k <= self.n);
        let mut out = BandedMatrix::zeros(k, self.kl, self.ku);
        for j in 0..k {
            let ilo = j.saturating_sub(self.ku);
            let ihi = (j + self.kl).min(k - 1);
            for i in ilo..=ihi {
                let dst = out.slot(i, j);
                out.ab[dst] = self.ab[self.slot(i, j)];
            }
        }
        out
    }

    /// y = A·x, used by residual checks.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let ilo = j.saturating_sub(self.ku);
            let ihi = (j + self.kl).min(self.n - 1);
            for i in ilo..=ihi {
                y[i] += self.ab[self.slot(i, j)] * x[j];
            }
        }
        y
    }

    /// LU factorization with partial pivoting (row swaps confined to the
    /// band; U widens to ku + kl super-diagonals).
    pub fn factor(&self) -> Result<BandedLu, SingularMatrix> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let lda = self.lda();
        let dg = kl + ku; // in-column offset of the diagonal entry
        let mut ab = self.ab.clone();
        let mut ipiv = vec![0usize; n];

        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            // pivot: largest magnitude in the current column at or below
            // the diagonal
            let mut p = j;
            let mut best = math::abs(ab[j * lda + dg]);
            for i in (j + 1)..=imax {
                let v = math::abs(ab[j * lda + dg + i - j]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(SingularMatrix { column: j });
            }
            ipiv[j] = p;
            let cmax = (j + dg).min(n - 1);
            if p != j {
                for c in j..=cmax {
                    ab.swap(c * lda + dg + j - c, c * lda + dg + p - c);
                }
            }
            let piv = ab[j * lda + dg];
            for i in (j + 1)..=imax {
                let mslot = j * lda + dg + i - j;
                let m = ab[mslot] / piv;
                ab[mslot] = m; // keep the multiplier in L's place
                for c in (j + 1)..=cmax {
                    let u_jc = ab[c * lda + dg + j - c];
                    ab[c * lda + dg + i - c] -= m * u_jc;
                }
            }
        }

        Ok(BandedLu { n, kl, ku, ab, ipiv })
    }
}

/// Factored form; solves by forward substitution with the stored
/// multipliers, then banded back substitution.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let lda = 2 * kl + ku + 1;
        let dg = kl + ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let imax = (j + kl).min(n - 1);
            for i in (j + 1)..=imax {
                b[i] -= self.ab[j * lda + dg + i - j] * b[j];
            }
        }
        for j in (0..n).rev() {
            let cmax = (j + dg).min(n - 1);
            let mut s = b[j];
            for c in (j + 1)..=cmax {
                s -= self.ab[c * lda + dg + j - c] * b[c];
            }
            b[j] = s / self.ab[j * lda + dg];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Complex right-hand side against the real matrix: two real solves.
    pub fn solve_complex_in_place(&self, b: &mut [Complex64]) {
        let mut re: Vec<f64> = b.iter().map(|c| c.re).collect();
        let mut im: Vec<f64> = b.iter().map(|c| c.im).collect();
        self.solve_in_place(&mut re);
        self.solve_in_place(&mut im);
        for (k, out) in b.iter_mut().enumerate() {
            *out = Complex64::new(re[k], im[k]);
        }
    }
}
