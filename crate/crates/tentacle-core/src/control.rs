//! Space–time control fields `u_k^n ∈ [−1, 1]`.
//!
//! The curvature control enters the model only through the moment density
//! `H = μ (ω u − q_s × q_ss)`; admissible controls are bounded by one in
//! magnitude at every node and time level. [`ControlField`] stores the full
//! table `u_k^n` for `k = 0..N`, `n = 0..M` in row-major order (one row per
//! time level), which is also the unknown layout of the dynamic optimizer.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Admissible control values on the full space–time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    n: usize,
    m: usize,
    /// `values[level * (n + 1) + k]`, level-major.
    values: Vec<f64>,
}

impl ControlField {
    /// Constant-in-space-and-time control. Requires `|c| ≤ 1`.
    pub fn constant(c: f64, grid: &Grid) -> Result<Self> {
        validate_value(c, 0, 0)?;
        Ok(ControlField {
            n: grid.n(),
            m: grid.m(),
            values: vec![c; (grid.n() + 1) * (grid.m() + 1)],
        })
    }

    /// Builds a control from a function of node index and time level.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = grid.n();
        let m = grid.m();
        let mut values = Vec::with_capacity((n + 1) * (m + 1));
        for level in 0..=m {
            for k in 0..=n {
                let v = f(k, level);
                validate_value(v, k, level)?;
                values.push(v);
            }
        }
        Ok(ControlField { n, m, values })
    }

    /// Replicates a spatial profile (one value per node) across all time
    /// levels.
    pub fn from_profile(profile: &[f64], grid: &Grid) -> Result<Self> {
        if profile.len() != grid.n() + 1 {
            return Err(Error::InvalidInput(format!(
                "control profile has {} values but the grid has {} nodes",
                profile.len(),
                grid.n() + 1
            )));
        }
        ControlField::from_fn(grid, |k, _| profile[k])
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

    /// The control row at time level `level` (`level = 0..=M`), one value per
    /// node `k = 0..=N`.
    #[inline]
    pub fn row(&self, level: usize) -> &[f64] {
        let w = self.n + 1;
        &self.values[level * w..(level + 1) * w]
    }

    /// Mutable access to the row at `level`.
    #[inline]
    pub fn row_mut(&mut self, level: usize) -> &mut [f64] {
        let w = self.n + 1;
        &mut self.values[level * w..(level + 1) * w]
    }

    /// Value `u_k^n`.
    #[inline]
    pub fn get(&self, k: usize, level: usize) -> f64 {
        self.values[level * (self.n + 1) + k]
    }

    /// Flat view of all values, level-major.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Flat mutable view of all values, level-major.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Largest magnitude over all nodes and levels.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Checks the admissibility bound `|u| ≤ 1` everywhere.
    pub fn validate(&self) -> Result<()> {
        let w = self.n + 1;
        for (i, &v) in self.values.iter().enumerate() {
            validate_value(v, i % w, i / w)?;
        }
        Ok(())
    }
}

fn validate_value(v: f64, k: usize, level: usize) -> Result<()> {
    if !v.is_finite() || v.abs() > 1.0 {
        return Err(Error::InvalidInput(format!(
            "control value {v} at node {k}, time level {level} violates |u| <= 1"
        )));
    }
    Ok(())
}
