//! Stationary shapes under constant-in-time controls, and the inverse map
//! from shapes back to controls.
//!
//! At rest the rod balances exactly when its signed curvature saturates the
//! controlled fraction of the curvature bound,
//!
//! ```text
//! κ(s) = ω̄(s) u(s),        ω̄ = μ ω / (μ + ε),
//! ```
//!
//! with tension `σ(s) = ε(s) (ω̄(s) u(s))²`. Integrating the turning angle
//! gives the explicit shape
//!
//! ```text
//! θ(ξ) = ∫₀^ξ ω̄ u dς,     q(s) = ∫₀^s (sin θ, −cos θ) dξ.
//! ```
//!
//! On the grid the construction is a chain of unit cells whose angles turn
//! *at the nodes*: cell `k` carries `θ_k = Σ_{j=0}^{k−1} ω̄_j u_j Δs`. That
//! placement is not arbitrary — the discrete elastic energy separates over
//! the angle increments `Δθ_k = θ_{k+1} − θ_k` of the free nodes
//! `k = 0..N−2` (the clamp fixes the incoming angle, the free-end closures
//! the last two increments), and each term is minimized at
//! `Δθ_k = ω̄_k u_k Δs + O((ω̄_k u_k Δs)³)`. The node-centered chain
//! therefore reproduces, to cubic accuracy per node, exactly the stationary
//! shape the damped dynamics settle on, including the turn contributed by
//! the clamp node itself.
//!
//! The inverse map inverts the per-node relation
//! `κ_k = D₋q_k × D²_cq_k = sin(Δθ_k)/Δs` for the control,
//! `u_k = asin(κ_k Δs)/(ω̄_k Δs)`, clamping into the admissible box
//! `[−1, 1]`; nodes with `ω̄_k = 0` accept only straight geometry.

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeField};
use crate::params::ParamSet;
use crate::stencil::{d2_central, d_minus};
use crate::tol;
use crate::vec2::Vec2;

use crate::dynamics::apply_q_closures;

/// A constant-in-time control profile `u_k ∈ [−1, 1]`, `k = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryControl {
    values: Vec<f64>,
}

impl StationaryControl {
    /// Constant profile. Requires `|c| ≤ 1`.
    pub fn constant(c: f64, n: usize) -> Result<Self> {
        StationaryControl::from_values(vec![c; n + 1])
    }

    /// Profile from nodal values (length `N+1`), validated against the
    /// admissibility bound.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "control value {v} at node {k} violates |u| <= 1"
                )));
            }
        }
        Ok(StationaryControl { values })
    }

    /// Profile sampled from a function of arclength.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        StationaryControl::from_values((0..=grid.n()).map(|k| f(grid.s(k))).collect())
    }

    /// Nodal values `u_0..u_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of spatial cells this profile covers.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }
}

/// The stationary shape and tension under control `u`.
///
/// Returns `(q, σ)`: positions with ghost slots filled (anchor ghost and
/// free-end closure) and nodal tensions `σ_k = ε_k (ω̄_k u_k)²`.
///
/// The turning angle accumulates at the nodes
/// (`θ_cell(k) = Σ_{j=0}^{k−1} ω̄_j u_j Δs`, so node `k` turns the chain by
/// `ω̄_k u_k Δs` and the clamp node contributes the first turn), every cell
/// is exactly unit length, and the shape is feasible for the constrained
/// dynamics at any resolution.
pub fn equilibrium_shape(
    u: &StationaryControl,
    p: &ParamSet,
    grid: &Grid,
) -> Result<(NodeField<Vec2>, NodeField<f64>)> {
    let n = grid.n();
    if u.n() != n {
        return Err(Error::InvalidInput(format!(
            "control profile covers {} cells but the grid has {}",
            u.n(),
            n
        )));
    }
    if p.n() != n {
        return Err(Error::InvalidInput(format!(
            "material data sampled on {} cells but the grid has {}",
            p.n(),
            n
        )));
    }
    let ds = grid.ds();

    let mut q: NodeField<Vec2> = NodeField::zeros(n);
    let mut theta = 0.0_f64;
    q[0] = Vec2::ZERO;
    for k in 1..=n as isize {
        // Node k−1 turns the chain before cell k is laid down: cell k
        // carries the angle accumulated through nodes 0..k−1.
        theta += p.omega_bar[k - 1] * u.values[(k - 1) as usize] * ds;
        q[k] = q[k - 1] + ds * Vec2::new(theta.sin(), -theta.cos());
    }
    // Ghost slots: anchor ghost and the tip extrapolation (the quadrature
    // value at q_N stands; only q_{N+1} and q_{−1} are synthesized).
    q[-1] = q[0] + ds * crate::vec2::E2;
    let qn = q[n as isize];
    let qn1 = q[n as isize - 1];
    q[n as isize + 1] = 2.0 * qn - qn1;

    let mut sigma: NodeField<f64> = NodeField::zeros(n);
    for k in 0..=n as isize {
        let kappa = p.omega_bar[k] * u.values[k as usize];
        sigma[k] = p.eps[k] * kappa * kappa;
    }

    Ok((q, sigma))
}

/// Recovers the stationary control generating a given shape.
///
/// For a chain of unit cells the signed curvature at node `k` is exactly
/// `κ_k = D₋q_k × D²_cq_k = sin(Δθ_k)/Δs` with `Δθ_k` the turn at that
/// node, so the control solves `u_k = asin(κ_k Δs)/(ω̄_k Δs)`, clamped into
/// `[−1, 1]`. On shapes produced by [`equilibrium_shape`] the round trip is
/// exact to rounding; on general shapes it is the first-order curvature
/// reading `κ_k/ω̄_k` plus the same trigonometric correction the forward
/// construction applies. At nodes where `ω̄_k = 0` the curvature must vanish
/// (within [`tol::SYNTHESIS_CURVATURE_TOL`]); otherwise the shape is not
/// stationary for any admissible control and synthesis fails.
///
/// Returns the control and whether any node actually clamped.
pub fn synthesize_control(
    q: &NodeField<Vec2>,
    p: &ParamSet,
    grid: &Grid,
) -> Result<(StationaryControl, bool)> {
    let n = grid.n();
    if q.n() != n || p.n() != n {
        return Err(Error::InvalidInput(
            "shape and material data must share the grid".to_string(),
        ));
    }
    let ds = grid.ds();
    let mut values = Vec::with_capacity(n + 1);
    let mut clamped = false;
    for k in 0..=n as isize {
        let curv = d2_central(q, k, ds);
        let kappa = d_minus(q, k, ds).cross(curv);
        let wb = p.omega_bar[k];
        if wb == 0.0 {
            if curv.norm() > tol::SYNTHESIS_CURVATURE_TOL {
                return Err(Error::Synthesis {
                    node: k as usize,
                    curvature: curv.norm(),
                });
            }
            values.push(0.0);
        } else {
            let raw = (kappa * ds).clamp(-1.0, 1.0).asin() / (wb * ds);
            if raw.abs() > 1.0 {
                clamped = true;
            }
            values.push(raw.clamp(-1.0, 1.0));
        }
    }
    Ok((StationaryControl { values }, clamped))
}

/// Packages an equilibrium shape as a resting dynamic state (zero velocity,
/// equilibrium tension, free-end ghost completion for the dynamics).
pub fn equilibrium_state(
    u: &StationaryControl,
    p: &ParamSet,
    grid: &Grid,
) -> Result<crate::dynamics::RodState> {
    let (mut q, sigma) = equilibrium_shape(u, p, grid)?;
    // The dynamic state keeps the tip slaved to the alignment closure, which
    // straightens the last cell; the quadrature tip differs from the slaved
    // one by O(Δs² ω̄_{N−1} u_{N−1}).
    apply_q_closures(&mut q, grid.ds());
    Ok(crate::dynamics::RodState {
        q,
        v: NodeField::zeros(grid.n()),
        sigma,
        t: 0.0,
    })
}
