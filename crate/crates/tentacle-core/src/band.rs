//! Banded LU factorization with partial pivoting.
//!
//! All linear systems in this crate (Newton corrections of the integrator,
//! quasi-Newton corrections of the static solver, the backward adjoint
//! steps) share one structure: square, nonsymmetric, with a fixed number of
//! sub- and superdiagonals. They are solved by the classic compact-band
//! algorithm: store row `i` as its diagonals only,
//!
//! ```text
//! storage[i][c]  ↔  A[i, i + c − m1],    c = 0 .. m1+m2,
//! ```
//!
//! eliminate columns left to right with row pivoting restricted to the `m1`
//! rows below the diagonal (which is all partial pivoting can reach in a
//! band), and keep the multipliers for the companion substitution routine.
//! Pivoting widens the upper bandwidth from `m2` to `m1 + m2`, which the
//! storage width `m1 + m2 + 1` accommodates because eliminated entries are
//! shifted out on the left as the factorization proceeds.
//!
//! Cost is `O(n·m1·(m1 + m2))` per factorization and `O(n·(m1 + m2))` per
//! solve — linear in `n` for the fixed small bandwidths used here.

use crate::error::{Error, Result};

/// A square banded matrix in compact storage, ready to be filled and
/// factored.
#[derive(Debug, Clone)]
pub struct BandMat {
    n: usize,
    m1: usize,
    m2: usize,
    w: usize,
    a: Vec<f64>,
}

impl BandMat {
    /// Zero matrix of dimension `n` with `m1` subdiagonals and `m2`
    /// superdiagonals.
    pub fn zeros(n: usize, m1: usize, m2: usize) -> Self {
        assert!(n > 0, "empty system");
        assert!(m1 < n && m2 < n, "bandwidths {m1},{m2} too large for n = {n}");
        let w = m1 + m2 + 1;
        BandMat {
            n,
            m1,
            m2,
            w,
            a: vec![0.0; n * w],
        }
    }

    /// Matrix dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.m1 >= i && j <= i + self.m2
    }

    /// Sets entry `(i, j)`; panics when the entry lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band m1 = {}, m2 = {} of n = {}",
            self.m1,
            self.m2,
            self.n
        );
        self.a[i * self.w + (j + self.m1 - i)] = value;
    }

    /// Adds to entry `(i, j)`; panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band m1 = {}, m2 = {} of n = {}",
            self.m1,
            self.m2,
            self.n
        );
        self.a[i * self.w + (j + self.m1 - i)] += value;
    }

    /// Reads entry `(i, j)`, returning zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.a[i * self.w + (j + self.m1 - i)]
        } else {
            0.0
        }
    }

    /// Resets all entries to zero, keeping the allocation.
    pub fn clear(&mut self) {
        self.a.fill(0.0);
    }

    /// Dense matrix–vector product `A·x` (for residual checks in tests and
    /// line searches; not used in inner loops).
    #[allow(clippy::needless_range_loop)]
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.m1);
            let hi = (i + self.m2).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.a[i * self.w + (j + self.m1 - i)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// LU-factors the matrix in place with partial pivoting.
    ///
    /// Fails with [`Error::SingularMatrix`] when an elimination column has no
    /// nonzero pivot candidate.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, m1, w) = (self.n, self.m1, self.w);
        let a = &mut self.a;

        // Left-justify the first m1 rows: their leading storage slots refer
        // to columns left of the matrix.
        for i in 0..m1.min(n) {
            let shift = m1 - i;
            for c in 0..w - shift {
                a[i * w + c] = a[i * w + c + shift];
            }
            for c in w - shift..w {
                a[i * w + c] = 0.0;
            }
        }

        let mut lower = vec![0.0; n * m1.max(1)];
        let mut pivot = vec![0usize; n];

        for k in 0..n {
            let last = (k + m1).min(n - 1);
            // Pivot: largest magnitude in storage column 0 among rows k..=last.
            let mut p = k;
            let mut best = a[k * w].abs();
            for i in k + 1..=last {
                if a[i * w].abs() > best {
                    best = a[i * w].abs();
                    p = i;
                }
            }
            pivot[k] = p;
            if a[p * w] == 0.0 {
                return Err(Error::SingularMatrix { column: k });
            }
            if p != k {
                for c in 0..w {
                    a.swap(k * w + c, p * w + c);
                }
            }
            let pivot_value = a[k * w];
            for i in k + 1..=last {
                let mult = a[i * w] / pivot_value;
                lower[k * m1.max(1) + (i - k - 1)] = mult;
                // Eliminate and shift the row left by one slot so its new
                // leading entry again sits in storage column 0.
                for c in 1..w {
                    a[i * w + c - 1] = a[i * w + c] - mult * a[k * w + c];
                }
                a[i * w + w - 1] = 0.0;
            }
        }

        Ok(BandLu {
            n,
            m1,
            w,
            upper: self.a,
            lower,
            pivot,
        })
    }
}

/// The LU factorization produced by [`BandMat::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    m1: usize,
    w: usize,
    /// Upper factor, row `i` left-justified: `upper[i][c] = U[i, i + c]`.
    upper: Vec<f64>,
    /// Elimination multipliers, `lower[k][i − k − 1]` for rows below pivot k.
    lower: Vec<f64>,
    pivot: Vec<usize>,
}

impl BandLu {
    /// Solves `A x = b` in place, overwriting `b` with `x`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, m1, w) = (self.n, self.m1, self.w);

        // Forward: apply row swaps and multipliers.
        for k in 0..n {
            let p = self.pivot[k];
            if p != k {
                b.swap(k, p);
            }
            let last = (k + m1).min(n - 1);
            for i in k + 1..=last {
                b[i] -= self.lower[k * m1.max(1) + (i - k - 1)] * b[k];
            }
        }

        // Back substitution on the left-justified upper factor.
        for i in (0..n).rev() {
            let mut x = b[i];
            let lim = (w - 1).min(n - 1 - i);
            for c in 1..=lim {
                x -= self.upper[i * w + c] * b[i + c];
            }
            b[i] = x / self.upper[i * w];
        }
    }

    /// Convenience wrapper returning the solution as a new vector.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
