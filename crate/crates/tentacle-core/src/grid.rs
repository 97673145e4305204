//! Uniform space–time mesh and ghost-padded nodal fields.
//!
//! Arclength `[0,1]` is divided into `N` cells with nodes `s_k = k/N`,
//! `k = 0..N`. The boundary closures of the rod model reference one ghost
//! node beyond each end, so nodal storage covers `k = −1..N+1`:
//!
//! ```text
//!   ghost   anchor                                    tip    ghost
//!    k=−1    k=0    k=1   ...                 k=N−1   k=N    k=N+1
//! ```
//!
//! [`NodeField`] owns that padded storage and is indexed by `isize` so stencil
//! code can write `f[k - 1]` without offset bookkeeping. Time is uniform as
//! well: `M` steps of size `Δt` cover the horizon `T = M·Δt`.

use crate::error::{Error, Result};

/// Uniform discretization of arclength and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    m: usize,
    dt: f64,
}

impl Grid {
    /// Builds a grid with `n` spatial cells and `m` time steps of size `dt`.
    ///
    /// Requires `n ≥ 4` (the widest stencil spans five nodes), `m ≥ 1` and
    /// `dt > 0` finite.
    pub fn new(n: usize, m: usize, dt: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidInput(format!(
                "need at least 4 spatial cells, got {n}"
            )));
        }
        if m < 1 {
            return Err(Error::InvalidInput("need at least 1 time step".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time step must be positive and finite, got {dt}"
            )));
        }
        Ok(Grid { n, m, dt })
    }

    /// Grid for purely spatial computations (single unit time step).
    pub fn space_only(n: usize) -> Result<Self> {
        Grid::new(n, 1, 1.0)
    }

    /// Number of spatial cells `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time steps `M`.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Time step `Δt`.
    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Cell width `Δs = 1/N`.
    #[inline]
    pub fn ds(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Time horizon `T = M·Δt`.
    #[inline]
    pub fn horizon(&self) -> f64 {
        self.m as f64 * self.dt
    }

    /// Arclength of node `k`, the correctly rounded `k/N` (so `s(N) = 1`
    /// exactly).
    #[inline]
    pub fn s(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    /// Time of step `n`.
    #[inline]
    pub fn t(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Nodal values over `k = −1..N+1` (physical nodes plus one ghost per end).
///
/// # Panics
///
/// Indexing outside `−1..=N+1` panics with the offending index and the valid
/// range; out-of-range access is a programming error, mirroring slice
/// indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> NodeField<T> {
    /// Field of default values (zeros for numeric types) on a grid with `n`
    /// cells.
    pub fn zeros(n: usize) -> Self {
        NodeField {
            n,
            data: vec![T::default(); n + 3],
        }
    }

    /// Builds a field by evaluating `f` on every slot `k = −1..=N+1`.
    pub fn from_fn(n: usize, f: impl FnMut(isize) -> T) -> Self {
        let data = (-1..=(n as isize + 1)).map(f).collect();
        NodeField { n, data }
    }

    /// Number of spatial cells `N` (physical nodes are `0..=N`).
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Values at the physical nodes `k = 0..=N`.
    pub fn physical(&self) -> &[T] {
        &self.data[1..=self.n + 1]
    }

    /// Iterates `(k, value)` over the physical nodes `k = 0..=N`.
    pub fn iter_physical(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.physical().iter().copied().enumerate()
    }

    #[inline]
    fn slot(&self, k: isize) -> usize {
        let max = self.n as isize + 1;
        if k < -1 || k > max {
            panic!("node index {k} outside populated range -1..={max}");
        }
        (k + 1) as usize
    }
}

impl<T: Copy + Default> std::ops::Index<isize> for NodeField<T> {
    type Output = T;
    #[inline]
    fn index(&self, k: isize) -> &T {
        &self.data[self.slot(k)]
    }
}

impl<T: Copy + Default> std::ops::IndexMut<isize> for NodeField<T> {
    #[inline]
    fn index_mut(&mut self, k: isize) -> &mut T {
        let i = self.slot(k);
        &mut self.data[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;

    #[test]
    fn grid_validates_sizes() {
        assert!(Grid::new(3, 1, 0.1).is_err());
        assert!(Grid::new(4, 0, 0.1).is_err());
        assert!(Grid::new(4, 1, 0.0).is_err());
        assert!(Grid::new(4, 1, -1.0).is_err());
        assert!(Grid::new(4, 1, f64::NAN).is_err());
        assert!(Grid::new(4, 1, 0.1).is_ok());
    }

    #[test]
    fn node_coordinates_are_exact_at_ends() {
        for n in [4usize, 10, 25, 50, 128, 1000] {
            let g = Grid::space_only(n).unwrap();
            assert_eq!(g.s(0), 0.0);
            assert_eq!(g.s(n), 1.0);
            // N·Δs must equal 1 to within one ulp.
            assert!((n as f64 * g.ds() - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn horizon_is_m_dt() {
        let g = Grid::new(10, 120_000, 1e-4).unwrap();
        assert!((g.horizon() - 12.0).abs() < 1e-12);
        assert_eq!(g.t(0), 0.0);
    }

    #[test]
    fn field_spans_ghosts() {
        let n = 5;
        let f = NodeField::from_fn(n, |k| k as f64);
        assert_eq!(f[-1], -1.0);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[n as isize + 1], 6.0);
        assert_eq!(f.physical().len(), n + 1);

        let mut g: NodeField<Vec2> = NodeField::zeros(n);
        g[-1] = Vec2::new(1.0, 2.0);
        assert_eq!(g[-1], Vec2::new(1.0, 2.0));
        assert_eq!(g[0], Vec2::ZERO);
    }

    #[test]
    #[should_panic(expected = "outside populated range")]
    fn out_of_range_panics() {
        let f: NodeField<f64> = NodeField::zeros(4);
        let _ = f[6];
    }
}
