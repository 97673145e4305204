//! Planar inextensible elastic rod ("tentacle") with curvature constraints and
//! distributed curvature controls.
//!
//! The rod is the unit-arclength curve `q(s) ∈ R²`, `s ∈ [0,1]`, clamped at the
//! anchor (`q(0) = 0`, `q_s(0) = -e₂`) and free at the tip. Its motion couples
//! four ingredients:
//!
//! ```text
//! ρ q_tt = (σ q_s − H q_ss⊥)_s − (G q_ss + H q_s⊥)_ss      equations of motion
//! |q_s|² = 1                                               inextensibility (tension σ)
//! G = ε + ν (|q_ss|² − ω²)₊                                constraint stiffening
//! H = μ (ω u − q_s × q_ss)                                 curvature control, u ∈ [−1,1]
//! ```
//!
//! with optional Rayleigh friction `−β q_t − γ q_sssst`.
//!
//! Everything is discretized on a uniform grid with two ghost nodes per end and
//! solved in double precision. The crate provides:
//!
//! * [`dynamics`] — constrained Velocity Verlet forward integration with a
//!   per-step Newton solve of the position/tension system.
//! * [`equilibrium`] — the closed-form stationary shapes and control synthesis.
//! * [`reach`] — the reachable set of the tip for constant curvature bound,
//!   built from one-switch extremal (Dubins-type) paths.
//! * [`static_opt`] — augmented Lagrangian solver for the stationary
//!   reach-a-target problem.
//! * [`dynamic_opt`] — adjoint-based projected gradient descent for the dynamic
//!   reach-and-stop problem.
//!
//! Supporting layers: [`grid`] (mesh and ghost-indexed fields), [`stencil`]
//! (finite differences), [`expr`] (material-law expressions), [`params`]
//! (validated material data), [`band`] (banded LU), [`vec2`], [`tol`]
//! (centralized tolerances).
//!
//! # Conventions
//!
//! The perpendicular is fixed globally as `w⊥ = (w_y, −w_x)` and the planar
//! cross product as `a × b = a · b⊥`; all modules share this orientation. The
//! straight reference rod hangs downward: `q(s) = (0, −s)`.

pub mod band;
pub mod control;
pub mod dynamic_opt;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod expr;
pub mod grid;
pub mod params;
pub mod reach;
pub mod static_opt;
pub mod stencil;
pub mod tol;
pub mod vec2;

pub use control::ControlField;
pub use dynamic_opt::{AdjointState, DynamicHistory, DynamicProblem};
pub use dynamics::{RodState, StepDiagnostics, Trajectory};
pub use equilibrium::StationaryControl;
pub use error::{Error, Result};
pub use expr::ParamExpr;
pub use grid::{Grid, NodeField};
pub use params::{benchmark_exprs, build_params, build_params_benchmark, ParamExprs, ParamSet};
pub use reach::{BoundaryLoop, DubinsControl, Membership, PathKind, ReachBoundary};
pub use static_opt::{StaticIterate, StaticOptions, StaticProblem, StaticSolution};
pub use vec2::Vec2;
