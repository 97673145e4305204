//! Constrained Velocity Verlet dynamics of the rod.
//!
//! # Semidiscrete model
//!
//! With `D₋`, `D₊`, `D²_c` the stencils of [`crate::stencil`], nodal fields
//! on `k = −1..N+1` and the material data of [`crate::params`], the
//! acceleration of node `k = 1..N−1` is
//!
//! ```text
//! a_k(q, σ) = (1/ρ_k) [ D₊(σ D₋q − H D²_cq⊥)_k − D²_c(G D²_cq + H D₋q⊥)_k ]
//!             − (1/ρ_k) [ β_k v_k + γ_k D²_c(D²_cv)_k ]        (friction)
//!
//! G_k = ε_k + ν_k (|D²_cq_k|² − ω_k²)₊
//! H_k = μ_k (ω_k u_k − D₋q_k × D²_cq_k)
//! ```
//!
//! subject to the inextensibility constraint `|D₋q_k| = 1` enforced by the
//! tension `σ` (with `σ_N = 0` at the free end), the anchor conditions
//! `q_0 = 0`, `q_{−1} = q_0 + Δs e₂` and the free-end closures
//!
//! ```text
//! q_N = 2 q_{N−1} − q_{N−2},    q_{N+1} = 2 q_N − q_{N−1},
//! ```
//!
//! which make the last three nodes collinear and the discrete curvature
//! vanish at `k = N−1, N`. Because those two curvatures are identities of
//! the closures (not degrees of freedom), the constitutive fields `G`, `H`
//! are zeroed at `k = N−1, N`: the force is then the exact gradient of the
//! discrete elastic energy in the reduced coordinates, which is what makes
//! the damped dynamics settle on the curvature-saturating equilibria.
//! Velocities inherit the same closures with `v_0 = v_{−1} = 0`.
//!
//! # Time stepping
//!
//! One constrained Velocity Verlet step solves the `3(N−1)` unknowns
//! `(q_k^{n+1}, σ_k^n)_{k=1..N−1}` from
//!
//! ```text
//! q_k^{n+1} = q_k^n + Δt v_k^n + (Δt²/2) a_k(q^n, σ^n)
//! |D₋q_k^{n+1}|² = 1,                     k = 1..N−1,
//! ```
//!
//! then updates velocities with the trapezoidal rule
//!
//! ```text
//! v_k^{n+1} = v_k^n + (Δt/2) [ a_k(q^n, σ^n) + a_k(q^{n+1}, σ^n) ],
//! ```
//!
//! reusing the tension solved in the position stage (one tension per step,
//! labeled at level `n`) and evaluating the friction force explicitly with
//! `v^n` in both acceleration evaluations. Because `G`, `H` and the friction
//! depend on the *known* state only, the position rows are linear in the
//! unknowns and the constraint rows are quadratic; Newton with the exact
//! banded Jacobian (bandwidth 5 in the interleaved ordering
//! `(q_{x,k}, q_{y,k}, σ_k)`) converges in a couple of iterations at
//! practical time steps.
//!
//! The updated velocity is finally projected onto the constraint tangent
//! space (`D₋q·D₋v = 0` cell by cell, a tridiagonal multiplier solve — the
//! RATTLE half of the constrained integrator). Skipping the projection
//! leaves a neutrally stable alternating mode in the tension that never
//! settles and poisons the tension diagnostics near equilibrium.

use crate::band::BandMat;
use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::grid::{Grid, NodeField};
use crate::params::ParamSet;
use crate::stencil::{d2_central, d_minus};
use crate::tol;
use crate::vec2::{Vec2, E2};

/// Rod state at one time level: positions, velocities, tensions.
///
/// Positions and velocities span the ghost-padded range `k = −1..N+1` and
/// always satisfy the anchor conditions and free-end closures; tensions are
/// meaningful on `k = 1..N` with `σ_N = 0`. The tension stored in a state is
/// the one solved in the step *leaving* that level (the final state of a
/// trajectory carries the last solved tension).
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    /// Node positions `q_k`.
    pub q: NodeField<Vec2>,
    /// Node velocities `v_k`.
    pub v: NodeField<Vec2>,
    /// Cell tensions `σ_k` (the multiplier of cell `k`'s constraint).
    pub sigma: NodeField<f64>,
    /// Time of this state.
    pub t: f64,
}

/// Applies the anchor ghost and free-end closures to a position field whose
/// physical values `q_0..q_{N−1}` are set (`q_N` is slaved to the alignment
/// closure).
pub(crate) fn apply_q_closures(q: &mut NodeField<Vec2>, ds: f64) {
    let n = q.n() as isize;
    q[-1] = q[0] + ds * E2;
    q[n] = 2.0 * q[n - 1] - q[n - 2];
    q[n + 1] = 2.0 * q[n] - q[n - 1];
}

/// Applies the clamped-end and free-end closures to a velocity field whose
/// interior values `v_1..v_{N−1}` are set.
pub(crate) fn apply_v_closures(v: &mut NodeField<Vec2>) {
    let n = v.n() as isize;
    v[-1] = Vec2::ZERO;
    v[0] = Vec2::ZERO;
    v[n] = 2.0 * v[n - 1] - v[n - 2];
    v[n + 1] = 2.0 * v[n] - v[n - 1];
}

impl RodState {
    /// The straight rod hanging at rest: `q_k = (0, −k Δs)`, `v = 0`,
    /// `σ = 0`, `t = 0`.
    pub fn straight(grid: &Grid) -> Self {
        let n = grid.n();
        let ds = grid.ds();
        let mut q = NodeField::zeros(n);
        for k in 0..n as isize {
            q[k] = Vec2::new(0.0, -(k as f64) * ds);
        }
        apply_q_closures(&mut q, ds);
        RodState {
            q,
            v: NodeField::zeros(n),
            sigma: NodeField::zeros(n),
            t: 0.0,
        }
    }

    /// Builds a state from cell direction angles.
    ///
    /// `angles[j]` is the direction `θ` of cell `j+1` (so `angles.len() =
    /// N−1`, cells `1..N−1`; cell `N` repeats the last angle per the
    /// alignment closure), measured from the hanging direction: cell tangent
    /// `τ(θ) = (sin θ, −cos θ)`. Velocities are zero, tensions zero, `t = 0`.
    pub fn from_angles(angles: &[f64], grid: &Grid) -> Result<Self> {
        let n = grid.n();
        if angles.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "need {} cell angles for {} cells (the last cell is slaved), got {}",
                n - 1,
                n,
                angles.len()
            )));
        }
        let ds = grid.ds();
        let mut q = NodeField::zeros(n);
        q[0] = Vec2::ZERO;
        for k in 1..n as isize {
            let theta = angles[(k - 1) as usize];
            q[k] = q[k - 1] + ds * Vec2::new(theta.sin(), -theta.cos());
        }
        apply_q_closures(&mut q, ds);
        Ok(RodState {
            q,
            v: NodeField::zeros(n),
            sigma: NodeField::zeros(n),
            t: 0.0,
        })
    }

    /// Builds and validates a state from physical node values `k = 0..N`.
    ///
    /// Checks the anchor (`q_0 = 0`, `v_0 = 0`), the inextensibility of every
    /// cell to [`tol::INITIAL_CONSTRAINT_TOL`], and that the supplied tip
    /// values agree with the free-end closures they are slaved to.
    pub fn from_positions(q_phys: &[Vec2], v_phys: &[Vec2], grid: &Grid) -> Result<Self> {
        let n = grid.n();
        let ds = grid.ds();
        if q_phys.len() != n + 1 || v_phys.len() != n + 1 {
            return Err(Error::InvalidInput(format!(
                "need {} node values, got {} positions and {} velocities",
                n + 1,
                q_phys.len(),
                v_phys.len()
            )));
        }
        if q_phys[0].max_abs() > tol::INITIAL_CONSTRAINT_TOL {
            return Err(Error::InvalidInput(format!(
                "anchor must sit at the origin, got ({}, {})",
                q_phys[0].x, q_phys[0].y
            )));
        }
        if v_phys[0].max_abs() != 0.0 {
            return Err(Error::InvalidInput(
                "anchor velocity must be zero".to_string(),
            ));
        }

        let mut q = NodeField::zeros(n);
        for k in 0..n {
            q[k as isize] = q_phys[k];
        }
        apply_q_closures(&mut q, ds);
        let tip_gap = (q_phys[n] - q[n as isize]).max_abs();
        if tip_gap > tol::INITIAL_CONSTRAINT_TOL {
            return Err(Error::InvalidInput(format!(
                "tip node must satisfy the alignment closure q_N = 2q_(N-1) - q_(N-2); \
                 supplied value deviates by {tip_gap:.3e}"
            )));
        }
        for k in 1..=n as isize {
            let c = (d_minus(&q, k, ds).norm_squared() - 1.0).abs();
            if c > tol::INITIAL_CONSTRAINT_TOL {
                return Err(Error::InvalidInput(format!(
                    "cell {k} violates inextensibility: | |D-q|^2 - 1 | = {c:.3e}"
                )));
            }
        }

        let mut v = NodeField::zeros(n);
        for k in 1..n {
            v[k as isize] = v_phys[k];
        }
        apply_v_closures(&mut v);
        let vscale = 1.0 + v_phys.iter().fold(0.0f64, |a, w| a.max(w.max_abs()));
        let v_tip_gap = (v_phys[n] - v[n as isize]).max_abs();
        if v_tip_gap > tol::INITIAL_CONSTRAINT_TOL * vscale {
            return Err(Error::InvalidInput(format!(
                "tip velocity must satisfy the closure v_N = 2v_(N-1) - v_(N-2); \
                 supplied value deviates by {v_tip_gap:.3e}"
            )));
        }

        Ok(RodState {
            q,
            v,
            sigma: NodeField::zeros(n),
            t: 0.0,
        })
    }

    /// Largest violation of `| |D₋q_k|² − 1 |` over the cells `k = 1..N`.
    pub fn constraint_violation(&self, grid: &Grid) -> f64 {
        let ds = grid.ds();
        (1..=grid.n() as isize)
            .map(|k| (d_minus(&self.q, k, ds).norm_squared() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Tip position `q_N`.
    pub fn tip(&self, grid: &Grid) -> Vec2 {
        self.q[grid.n() as isize]
    }

    /// Acceleration of the interior nodes under control row `u`.
    pub fn acceleration(
        &self,
        u_row: &[f64],
        p: &ParamSet,
        grid: &Grid,
        with_friction: bool,
    ) -> NodeField<Vec2> {
        acceleration(&self.q, &self.v, &self.sigma, u_row, p, grid, with_friction)
    }
}

/// The constitutive fields `G_k` and `H_k` on the physical nodes `k = 0..N`.
///
/// The free-end closures slave `q_N` and `q_{N+1}` to the last two interior
/// nodes, which makes the discrete curvatures `D²_cq_{N−1}` and `D²_cq_N`
/// vanish *identically* as functions of the degrees of freedom. The elastic
/// energy therefore exerts no force through nodes `N−1` and `N`, and the
/// fields are zeroed there so the assembled force is the exact gradient of
/// the discrete energy under the closures. (Keeping the raw `H` at those
/// nodes injects a spurious `O(1)` moment at the free end that displaces the
/// steady state of the damped dynamics.)
pub fn gh_fields(
    q: &NodeField<Vec2>,
    u_row: &[f64],
    p: &ParamSet,
    grid: &Grid,
) -> (NodeField<f64>, NodeField<f64>) {
    let n = grid.n();
    let ds = grid.ds();
    let mut g = NodeField::zeros(n);
    let mut h = NodeField::zeros(n);
    for k in 0..=n as isize {
        let curv = d2_central(q, k, ds);
        let tangent = d_minus(q, k, ds);
        let excess = (curv.norm_squared() - p.omega[k] * p.omega[k]).max(0.0);
        g[k] = p.eps[k] + p.nu[k] * excess;
        h[k] = p.mu[k] * (p.omega[k] * u_row[k as usize] - tangent.cross(curv));
    }
    let n = n as isize;
    g[n - 1] = 0.0;
    g[n] = 0.0;
    h[n - 1] = 0.0;
    h[n] = 0.0;
    (g, h)
}

/// Acceleration `a_k(q, v, σ; u)` of the interior nodes `k = 1..N−1`
/// (remaining slots zero). Ghost slots of `q` and `v` must be filled.
pub fn acceleration(
    q: &NodeField<Vec2>,
    v: &NodeField<Vec2>,
    sigma: &NodeField<f64>,
    u_row: &[f64],
    p: &ParamSet,
    grid: &Grid,
    with_friction: bool,
) -> NodeField<Vec2> {
    let n = grid.n();
    let ds = grid.ds();
    let (g, h) = gh_fields(q, u_row, p, grid);

    // Flux F_j = G_j D²_cq_j + H_j (D₋q_j)⊥ on j = 0..N.
    let mut curv: NodeField<Vec2> = NodeField::zeros(n);
    let mut flux: NodeField<Vec2> = NodeField::zeros(n);
    for j in 0..=n as isize {
        let c = d2_central(q, j, ds);
        curv[j] = c;
        flux[j] = g[j] * c + h[j] * d_minus(q, j, ds).perp();
    }

    let mut a: NodeField<Vec2> = NodeField::zeros(n);
    for k in 1..n as isize {
        let edge = |j: isize| sigma[j] * d_minus(q, j, ds) - h[j] * curv[j].perp();
        let transport = (edge(k + 1) - edge(k)) / ds;
        let bending = (flux[k + 1] - flux[k] * 2.0 + flux[k - 1]) / (ds * ds);
        let mut acc = (transport - bending) / p.rho[k];
        if with_friction {
            acc -= friction_force(v, k, p, ds) / p.rho[k];
        }
        a[k] = acc;
    }
    a
}

/// Friction force density `β_k v_k + γ_k D²_c(D²_cv)_k` at node `k`.
#[inline]
fn friction_force(v: &NodeField<Vec2>, k: isize, p: &ParamSet, ds: f64) -> Vec2 {
    let cv = |j: isize| d2_central(v, j, ds);
    let dd = (cv(k + 1) - cv(k) * 2.0 + cv(k - 1)) / (ds * ds);
    p.beta[k] * v[k] + p.gamma[k] * dd
}

/// Options for a single step / a simulation run.
#[derive(Debug, Clone, Copy)]
pub struct StepOpts {
    /// Include the Rayleigh friction forces.
    pub with_friction: bool,
    /// Newton convergence threshold on the max-norm residual.
    pub newton_tol: f64,
    /// Newton iteration cap per step.
    pub max_iters: usize,
}

impl Default for StepOpts {
    fn default() -> Self {
        StepOpts {
            with_friction: true,
            newton_tol: tol::NEWTON_TOL,
            max_iters: tol::NEWTON_MAX_ITERS,
        }
    }
}

/// Result of one Verlet step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// State at the next time level (carrying the tension solved in this
    /// step).
    pub state: RodState,
    /// Newton iterations used by the position/tension solve.
    pub newton_iters: usize,
    /// Final max-norm residual of the nonlinear system.
    pub residual: f64,
}

/// Stage data frozen at the beginning of a step: the acceleration split into
/// its σ-independent base and the tension-transport coefficients.
struct StageData {
    /// `D₋q^n_j`, `j = 0..N`.
    dq: NodeField<Vec2>,
    /// σ-free part of `a_k(q^n, ·)` including explicit friction.
    base: NodeField<Vec2>,
    /// Position-row constants `q^n_k + Δt v^n_k + (Δt²/2) base_k`.
    rhs0: Vec<Vec2>,
    /// σ coefficients `c_k = Δt²/(2 ρ_k Δs)` for the position rows.
    csig: Vec<f64>,
}

fn stage_data(
    state: &RodState,
    u_row: &[f64],
    p: &ParamSet,
    grid: &Grid,
    opts: &StepOpts,
) -> StageData {
    let n = grid.n();
    let ds = grid.ds();
    let dt = grid.dt();
    let (g, h) = gh_fields(&state.q, u_row, p, grid);

    let mut dq: NodeField<Vec2> = NodeField::zeros(n);
    let mut curv: NodeField<Vec2> = NodeField::zeros(n);
    let mut flux: NodeField<Vec2> = NodeField::zeros(n);
    for j in 0..=n as isize {
        dq[j] = d_minus(&state.q, j, ds);
        let c = d2_central(&state.q, j, ds);
        curv[j] = c;
        flux[j] = g[j] * c + h[j] * dq[j].perp();
    }

    let mut base: NodeField<Vec2> = NodeField::zeros(n);
    for k in 1..n as isize {
        let hedge = |j: isize| h[j] * curv[j].perp();
        let transport = (hedge(k) - hedge(k + 1)) / ds;
        let bending = (flux[k + 1] - flux[k] * 2.0 + flux[k - 1]) / (ds * ds);
        let mut b = (transport - bending) / p.rho[k];
        if opts.with_friction {
            b -= friction_force(&state.v, k, p, ds) / p.rho[k];
        }
        base[k] = b;
    }

    let half_dt2 = 0.5 * dt * dt;
    let mut rhs0 = Vec::with_capacity(n - 1);
    let mut csig = Vec::with_capacity(n - 1);
    for k in 1..n as isize {
        rhs0.push(state.q[k] + dt * state.v[k] + half_dt2 * base[k]);
        csig.push(half_dt2 / (p.rho[k] * ds));
    }

    StageData {
        dq,
        base,
        rhs0,
        csig,
    }
}

/// Evaluates `a(q^n, σ)` from frozen stage data.
fn accel_old(stage: &StageData, sigma: &NodeField<f64>, p: &ParamSet, ds: f64) -> NodeField<Vec2> {
    let n = stage.base.n();
    let mut a: NodeField<Vec2> = NodeField::zeros(n);
    for k in 1..n as isize {
        a[k] = stage.base[k]
            + (sigma[k + 1] * stage.dq[k + 1] - sigma[k] * stage.dq[k]) / (p.rho[k] * ds);
    }
    a
}

/// Builds the level-`n+1` state from the unknown vector (converged or not).
fn assemble_state(
    x: &[f64],
    state: &RodState,
    stage: &StageData,
    u_row: &[f64],
    p: &ParamSet,
    grid: &Grid,
    opts: &StepOpts,
) -> RodState {
    let n = grid.n();
    let ds = grid.ds();
    let dt = grid.dt();

    let mut q_new: NodeField<Vec2> = NodeField::zeros(n);
    q_new[0] = state.q[0];
    for k in 1..n {
        q_new[k as isize] = Vec2::new(x[3 * (k - 1)], x[3 * (k - 1) + 1]);
    }
    apply_q_closures(&mut q_new, ds);

    let mut sigma: NodeField<f64> = NodeField::zeros(n);
    for k in 1..n {
        sigma[k as isize] = x[3 * (k - 1) + 2];
    }

    // Trapezoidal velocity update with the solved tension in both
    // evaluations; friction stays explicit in v^n.
    let a_old = accel_old(stage, &sigma, p, ds);
    let a_new = acceleration(&q_new, &state.v, &sigma, u_row, p, grid, opts.with_friction);

    let mut v_new: NodeField<Vec2> = NodeField::zeros(n);
    let half_dt = 0.5 * dt;
    for k in 1..n as isize {
        v_new[k] = state.v[k] + half_dt * (a_old[k] + a_new[k]);
    }
    apply_v_closures(&mut v_new);

    RodState {
        q: q_new,
        v: v_new,
        sigma,
        t: state.t + dt,
    }
}

/// Projects the velocity onto the tangent space of the inextensibility
/// constraints at the current positions (the RATTLE completion of the
/// position-stage solve).
///
/// Finds cell multipliers `η_k` such that the corrected velocity
/// `v + (1/ρ) D₊(η D₋q)` satisfies `D₋q_k · D₋v_k = 0` for `k = 1..N−1`
/// (cell `N` then satisfies it automatically through the free-end closures)
/// and applies the correction in place. Without this projection the
/// velocity component along the constraint gradients hosts a neutrally
/// stable period-2 mode — the solved tension then alternates between two
/// values forever instead of settling, even though the positions converge.
///
/// The system is tridiagonal and symmetric negative definite for unit
/// cells; a singular factorization signals degenerate geometry.
fn project_velocity(
    v: &mut NodeField<Vec2>,
    q: &NodeField<Vec2>,
    p: &ParamSet,
    grid: &Grid,
) -> Result<()> {
    let n = grid.n();
    let ds = grid.ds();
    let dim = n - 1;
    let mut dq: NodeField<Vec2> = NodeField::zeros(n);
    for j in 1..=n as isize {
        dq[j] = d_minus(q, j, ds);
    }

    let mut mat = BandMat::zeros(dim, 1, 1);
    let mut rhs = vec![0.0; dim];
    for k in 1..n {
        let row = k - 1;
        let ki = k as isize;
        // Row k: Δs² · d/dη [ dq_k · (w_k − w_{k−1})/Δs ] with
        // w_j = (η_{j+1} dq_{j+1} − η_j dq_j)/(ρ_j Δs), η_N = 0, w_0 = 0.
        let mut diag = -dq[ki].norm_squared() / p.rho[ki];
        if k >= 2 {
            diag -= dq[ki].norm_squared() / p.rho[ki - 1];
            mat.set(row, row - 1, dq[ki - 1].dot(dq[ki]) / p.rho[ki - 1]);
        }
        if k + 1 < n {
            mat.set(row, row + 1, dq[ki].dot(dq[ki + 1]) / p.rho[ki]);
        }
        mat.set(row, row, diag);
        rhs[row] = -ds * dq[ki].dot(v[ki] - v[ki - 1]);
    }

    let lu = mat.factor()?;
    lu.solve_in_place(&mut rhs);

    for k in 1..n as isize {
        let eta_k = rhs[(k - 1) as usize];
        let eta_k1 = if k + 1 < n as isize {
            rhs[k as usize]
        } else {
            0.0
        };
        v[k] += (eta_k1 * dq[k + 1] - eta_k * dq[k]) / (p.rho[k] * ds);
    }
    apply_v_closures(v);
    Ok(())
}

/// Advances the rod one step of size `Δt` under control row `u`.
///
/// The incoming state's tension seeds the Newton iteration for the tension
/// solved in this step.
pub fn verlet_step(
    state: &RodState,
    u_row: &[f64],
    p: &ParamSet,
    grid: &Grid,
    opts: &StepOpts,
) -> Result<StepOutcome> {
    let n = grid.n();
    let ds = grid.ds();
    let dt = grid.dt();
    let dim = 3 * (n - 1);
    assert_eq!(u_row.len(), n + 1, "control row must cover all nodes");

    let stage = stage_data(state, u_row, p, grid, opts);

    // Unknowns interleaved as (q_x, q_y, σ) per interior node k = 1..N−1.
    let mut x = vec![0.0; dim];
    for k in 1..n {
        let guess = state.q[k as isize] + dt * state.v[k as isize];
        x[3 * (k - 1)] = guess.x;
        x[3 * (k - 1) + 1] = guess.y;
        x[3 * (k - 1) + 2] = state.sigma[k as isize];
    }

    let anchor = state.q[0];
    let ds2 = ds * ds;
    let mut qn: Vec<Vec2> = vec![Vec2::ZERO; n]; // iterate nodes 0..N−1
    let mut resid = vec![0.0; dim];

    let eval_residual = |x: &[f64], qn: &mut [Vec2], resid: &mut [f64]| {
        qn[0] = anchor;
        for k in 1..n {
            qn[k] = Vec2::new(x[3 * (k - 1)], x[3 * (k - 1) + 1]);
        }
        for k in 1..n {
            let i = 3 * (k - 1);
            let sig_k = x[i + 2];
            let sig_k1 = if k + 1 < n { x[3 * k + 2] } else { 0.0 };
            let sterm = (sig_k1 * stage.dq[k as isize + 1] - sig_k * stage.dq[k as isize])
                * stage.csig[k - 1];
            let pres = qn[k] - stage.rhs0[k - 1] - sterm;
            resid[i] = pres.x;
            resid[i + 1] = pres.y;
            let cell = qn[k] - qn[k - 1];
            resid[i + 2] = cell.norm_squared() / ds2 - 1.0;
        }
    };
    let max_norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    eval_residual(&x, &mut qn, &mut resid);
    let mut residual = max_norm(&resid);
    let mut iters = 0;

    while residual > opts.newton_tol || !residual.is_finite() {
        if iters >= opts.max_iters || !residual.is_finite() {
            return Err(Error::StepFailed {
                t: state.t,
                residual,
                iters,
                iterate: Box::new(assemble_state(&x, state, &stage, u_row, p, grid, opts)),
            });
        }

        // Exact Jacobian: position rows are linear (identity plus σ
        // couplings), constraint rows depend on the current positions.
        let mut jac = BandMat::zeros(dim, 5, 5);
        for k in 1..n {
            let i = 3 * (k - 1);
            let c = stage.csig[k - 1];
            jac.set(i, i, 1.0);
            jac.set(i + 1, i + 1, 1.0);
            // ∂P_k/∂σ_k = +c_k D₋q^n_k, ∂P_k/∂σ_{k+1} = −c_k D₋q^n_{k+1}.
            jac.set(i, i + 2, c * stage.dq[k as isize].x);
            jac.set(i + 1, i + 2, c * stage.dq[k as isize].y);
            if k + 1 < n {
                jac.set(i, 3 * k + 2, -c * stage.dq[k as isize + 1].x);
                jac.set(i + 1, 3 * k + 2, -c * stage.dq[k as isize + 1].y);
            }
            let cell = (qn[k] - qn[k - 1]) * (2.0 / ds2);
            jac.set(i + 2, i, cell.x);
            jac.set(i + 2, i + 1, cell.y);
            if k >= 2 {
                jac.set(i + 2, i - 3, -cell.x);
                jac.set(i + 2, i - 2, -cell.y);
            }
        }

        let lu = match jac.factor() {
            Ok(lu) => lu,
            Err(_) => {
                return Err(Error::StepFailed {
                    t: state.t,
                    residual,
                    iters,
                    iterate: Box::new(assemble_state(&x, state, &stage, u_row, p, grid, opts)),
                })
            }
        };
        let mut delta = resid.clone();
        for d in delta.iter_mut() {
            *d = -*d;
        }
        lu.solve_in_place(&mut delta);
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi += di;
        }

        iters += 1;
        eval_residual(&x, &mut qn, &mut resid);
        residual = max_norm(&resid);
    }

    let mut next = assemble_state(&x, state, &stage, u_row, p, grid, opts);
    if project_velocity(&mut next.v, &next.q, p, grid).is_err() {
        return Err(Error::StepFailed {
            t: state.t,
            residual,
            iters,
            iterate: Box::new(next),
        });
    }
    Ok(StepOutcome {
        state: next,
        newton_iters: iters,
        residual,
    })
}

/// Per-level diagnostics recorded during a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Time level `n`.
    pub step: usize,
    /// Time `t = n Δt`.
    pub t: f64,
    /// Curvature-saturation error `E_q`.
    pub shape_error: f64,
    /// Tension-consistency error `E_σ`.
    pub tension_error: f64,
    /// Kinetic diagnostic `J_v`.
    pub velocity_cost: f64,
    /// Newton iterations of the step that produced this level (0 at level 0).
    pub newton_iters: usize,
    /// Final Newton residual of that step (0 at level 0).
    pub residual: f64,
}

/// A simulated trajectory: all states and per-level diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at levels `0..=M`. Level `n < M` carries the tension solved in
    /// step `n → n+1`; level `M` repeats the last solved tension.
    pub states: Vec<RodState>,
    /// Diagnostics at levels `0..=M`.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    /// The final state.
    pub fn last(&self) -> &RodState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Curvature-saturation error
/// `E_q = max_{k=0..N−2} | |D²_cq_k| − ω̄_k |`.
///
/// The last two nodes are excluded: the free-end closures force their
/// discrete curvature to zero identically, so their saturation gap equals
/// `ω̄` there and carries no information about the solve.
pub fn shape_error(state: &RodState, p: &ParamSet, grid: &Grid) -> f64 {
    let ds = grid.ds();
    (0..=grid.n() as isize - 2)
        .map(|k| (d2_central(&state.q, k, ds).norm() - p.omega_bar[k]).abs())
        .fold(0.0, f64::max)
}

/// Tension-consistency error `E_σ = max_{k=1..N} |σ_k − ε_k ω̄_k²|`.
pub fn tension_error(state: &RodState, p: &ParamSet, grid: &Grid) -> f64 {
    (1..=grid.n() as isize)
        .map(|k| (state.sigma[k] - p.eps[k] * p.omega_bar[k] * p.omega_bar[k]).abs())
        .fold(0.0, f64::max)
}

/// Kinetic diagnostic `J_v = (Δs/2) Σ_{k=0..N} ρ_k |v_k|²`.
pub fn velocity_cost(state: &RodState, p: &ParamSet, grid: &Grid) -> f64 {
    let sum: f64 = (0..=grid.n() as isize)
        .map(|k| p.rho[k] * state.v[k].norm_squared())
        .sum();
    0.5 * grid.ds() * sum
}

/// Control-effort diagnostic `J_u = (Δs/2) Σ_{k=0..N} u_k²`.
pub fn control_cost(u_row: &[f64], grid: &Grid) -> f64 {
    let sum: f64 = u_row.iter().map(|u| u * u).sum();
    0.5 * grid.ds() * sum
}

/// Target diagnostic `J_{q*} = |q_N − q*|² / (2τ)`.
pub fn target_cost(state: &RodState, target: Vec2, tau: f64, grid: &Grid) -> f64 {
    (state.tip(grid) - target).norm_squared() / (2.0 * tau)
}

/// Discrete mechanical energy: kinetic part over the interior nodes plus the
/// elastic potential
/// `Σ_k Δs [ ¼ν((|D²_cq|² − ω²)₊)² + ½ε|D²_cq|² + ½μ(ωu − D₋q × D²_cq)² ]`.
pub fn discrete_energy(state: &RodState, u_row: &[f64], p: &ParamSet, grid: &Grid) -> f64 {
    let n = grid.n();
    let ds = grid.ds();
    let mut kinetic = 0.0;
    for k in 1..n as isize {
        kinetic += 0.5 * p.rho[k] * state.v[k].norm_squared() * ds;
    }
    let mut potential = 0.0;
    for k in 0..=n as isize {
        let c = d2_central(&state.q, k, ds);
        let dq = d_minus(&state.q, k, ds);
        let excess = (c.norm_squared() - p.omega[k] * p.omega[k]).max(0.0);
        let twist = p.omega[k] * u_row[k as usize] - dq.cross(c);
        potential += ds
            * (0.25 * p.nu[k] * excess * excess
                + 0.5 * p.eps[k] * c.norm_squared()
                + 0.5 * p.mu[k] * twist * twist);
    }
    kinetic + potential
}

/// Integrates `M` steps from `initial` under the control field `u`.
///
/// Fails fast on inconsistent sizes, on an initial state violating the
/// constraint, or on a non-converging step (the error carries the last
/// iterate).
pub fn simulate(
    initial: &RodState,
    u: &ControlField,
    p: &ParamSet,
    grid: &Grid,
    opts: &StepOpts,
) -> Result<Trajectory> {
    let n = grid.n();
    let m = grid.m();
    if u.n() != n || u.m() != m {
        return Err(Error::InvalidInput(format!(
            "control field sized {}x{} does not match grid {}x{}",
            u.n(),
            u.m(),
            n,
            m
        )));
    }
    if p.n() != n {
        return Err(Error::InvalidInput(format!(
            "material data sampled on {} cells but the grid has {}",
            p.n(),
            n
        )));
    }
    u.validate()?;
    let violation = initial.constraint_violation(grid);
    if violation > tol::INITIAL_CONSTRAINT_TOL {
        return Err(Error::InvalidInput(format!(
            "initial state violates inextensibility by {violation:.3e}"
        )));
    }

    let mut states = Vec::with_capacity(m + 1);
    states.push(initial.clone());
    let mut step_stats = Vec::with_capacity(m + 1);
    step_stats.push((0usize, 0.0f64));

    for level in 0..m {
        let out = verlet_step(&states[level], u.row(level), p, grid, opts)?;
        // Label the solved tension at the level it belongs to (level n for
        // the step n → n+1); the pushed state keeps a copy so the final
        // level still carries a meaningful tension.
        states[level].sigma = out.state.sigma.clone();
        states.push(out.state);
        step_stats.push((out.newton_iters, out.residual));
    }

    let diagnostics = states
        .iter()
        .enumerate()
        .map(|(level, s)| StepDiagnostics {
            step: level,
            t: grid.t(level),
            shape_error: shape_error(s, p, grid),
            tension_error: tension_error(s, p, grid),
            velocity_cost: velocity_cost(s, p, grid),
            newton_iters: step_stats[level].0,
            residual: step_stats[level].1,
        })
        .collect();

    Ok(Trajectory {
        states,
        diagnostics,
    })
}
