//! Dynamic reach-and-stop optimization via the adjoint method.
//!
//! Placeholder; implemented after the dynamics oracles are in place.

use crate::grid::NodeField;
use crate::vec2::Vec2;

/// Problem data for the dynamic target problem.
#[derive(Debug, Clone)]
pub struct DynamicProblem {
    /// Target tip position.
    pub target: Vec2,
    /// Tip-tracking weight parameter `τ`.
    pub tau: f64,
    /// Descent step size `α`.
    pub alpha: f64,
    /// Stopping tolerance on the control update max-norm.
    pub tol: f64,
}

/// Adjoint state at one time level.
#[derive(Debug, Clone)]
pub struct AdjointState {
    /// Adjoint positions `q̄_k`.
    pub qbar: NodeField<Vec2>,
    /// Adjoint velocities `w̄_k = −q̄_t`.
    pub wbar: NodeField<Vec2>,
    /// Adjoint tensions `σ̄_k`.
    pub sigbar: NodeField<f64>,
}

/// Convergence history entry of the projected gradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicHistory {
    /// Descent iteration.
    pub iter: usize,
    /// Total objective.
    pub objective: f64,
    /// Control-effort component.
    pub control_cost: f64,
    /// Target-tracking component.
    pub target_cost: f64,
    /// Final kinetic component.
    pub final_velocity_cost: f64,
    /// Max-norm of the projected gradient step.
    pub control_change: f64,
}
