//! Shared setup helpers for the criterion benchmarks.
//!
//! The benchmark targets live in `benches/`; this library only centralizes
//! the scenario construction they share so the measured sections stay free of
//! setup noise.

use tentacle_core::{build_params_benchmark, ControlField, Grid, ParamSet, RodState};

/// Benchmark material data on `n` cells with the standard friction laws.
pub fn benchmark_params(n: usize, m: usize, dt: f64) -> (Grid, ParamSet) {
    let grid = Grid::new(n, m, dt).expect("valid benchmark grid");
    let params = build_params_benchmark(&grid).expect("benchmark material data");
    (grid, params)
}

/// Straight rod at rest with constant full control.
pub fn straight_start(grid: &Grid) -> (RodState, ControlField) {
    let state = RodState::straight(grid);
    let control = ControlField::constant(1.0, grid).expect("admissible control");
    (state, control)
}
