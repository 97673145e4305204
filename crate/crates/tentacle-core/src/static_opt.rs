//! Stationary reach-a-target optimization.
//!
//! The task: rest the tip as close as possible to a target `q*` with minimum
//! bending effort while respecting the curvature constraint,
//!
//! ```text
//! minimize    ½ ∫ (1/ω̄²) |q_ss|² ds + (1/2τ) |q(1) − q*|²
//! subject to  |q_s| = 1,   |q_ss|² ≤ ω̄²,   q(0) = 0,  q_s(0) = −e₂.
//! ```
//!
//! A method-of-multipliers treatment of the curvature inequality eliminates
//! its slack variable in closed form; what remains of the optimality system is
//! an elastica-type boundary value problem in the shape and the tension, with
//! a multiplier-dependent stiffness
//!
//! ```text
//! Λ(q_ss, λ) = 1/ω̄² + max{λ + (1/ρ_λ)(|q_ss|² − ω̄²), 0}.
//! ```
//!
//! On the grid the solved system couples the unknowns
//! `(q_1 … q_{N+1}, σ_1 … σ_N)` — the anchor rows `q_0 = 0`,
//! `q_{−1} = q_0 + Δs e₂` stay fixed — through `3N + 2` equations:
//!
//! ```text
//! D²_c(Λ_k C_k) − D₊(σ D₋q)_k = 0      k = 1 … N−1,   C_k = D²_c q_k
//! |D₋q_k|² − 1 = 0                     k = 1 … N
//! q_{N+1} − 2 q_N + q_{N−1} = 0        zero tip moment
//! σ_N D₋q_N + (1/τ)(q_N − q*) = 0      tip force balance
//! ```
//!
//! Two numerical points deserve emphasis:
//!
//! * the tip-moment closure is substituted into the last interior row, so the
//!   stiffness product `Λ_N C_N` never appears. This mirrors how the natural
//!   boundary condition enters the continuum operator, and it matters in
//!   floating point: the control authority vanishes at the free end, the
//!   objective weight `1/ω̄²` is therefore floored there
//!   ([`tol::OMEGA_BAR_FLOOR`]), and a floored-but-large weight multiplying
//!   the rounding noise of `C_N` would otherwise put an `O(1e−3)` floor under
//!   the achievable residual;
//! * the inner solver is a damped quasi-Newton iteration whose Jacobian
//!   freezes `Λ` at the previous iterate (the bending block becomes
//!   `Λ̄ D²_cD²_c`), exact for the remaining bilinear and quadratic rows.
//!   Cold starts — the straight rod against a distant target — sit outside
//!   the Newton basin, and the straight-to-target deformation passes folds
//!   where the linearization loses rank. Such solves run through an adaptive
//!   homotopy that walks the target from the starting tip position to the
//!   requested point while the tracking weight sharpens from `τ = 1` to the
//!   requested value, each stage warm-starting the next.
//!
//! The outer loop is the classical multiplier ascent: solve the system at
//! frozen `λ`, then `λ_k ← max{λ_k + (1/ρ_λ)(|C_k|² − ω̄_k²), 0}` for the
//! interior nodes, until the discrete objective
//!
//! ```text
//! J♯(q) = ½ Δs Σ_{k=0}^N (1/ω̄_k²) |C_k|² + (1/2τ) |q_N − q*|²
//! ```
//!
//! changes by less than the outer tolerance. An accelerated single-loop
//! variant (one Newton step and one multiplier update per outer iteration)
//! is available behind [`StaticOptions::single_loop`].

use crate::band::BandMat;
use crate::equilibrium::{synthesize_control, StationaryControl};
use crate::error::{Error, Result};
use crate::grid::{Grid, NodeField};
use crate::params::ParamSet;
use crate::stencil::{d2_central, d_minus};
use crate::tol;
use crate::vec2::{Vec2, E2};

/// Armijo slope for the residual-norm line search of the inner solver.
const ARMIJO: f64 = 1e-4;

/// Step halvings attempted before the inner solver accepts the best trial.
const MAX_BACKTRACKS: usize = 13;

/// First homotopy increment of the cold-start continuation.
const CONTINUATION_STEP0: f64 = 0.25;

/// Smallest homotopy increment before the continuation driver gives up.
const CONTINUATION_MIN_STEP: f64 = 1e-3;

/// A Newton stage that fails to shrink its residual by ten percent within
/// this many iterations is declared stalled, so the continuation driver can
/// retreat instead of burning its iteration budget.
const STALL_WINDOW: usize = 30;

/// Problem data for the stationary target problem.
#[derive(Debug, Clone)]
pub struct StaticProblem {
    /// Target tip position.
    pub target: Vec2,
    /// Tip-tracking weight `1/(2τ)` parameter `τ`.
    pub tau: f64,
    /// Augmented-Lagrangian penalty parameter `ρ_λ`.
    pub rho_lambda: f64,
    /// Outer-loop stopping tolerance on the objective change.
    pub tol: f64,
}

impl StaticProblem {
    /// Problem with the reference penalties `τ = 1e−4`, `ρ_λ = 1e2` and the
    /// outer tolerance `1e−8`.
    pub fn new(target: Vec2) -> Self {
        StaticProblem {
            target,
            tau: 1e-4,
            rho_lambda: 1e2,
            tol: 1e-8,
        }
    }

    /// Checks the sign conditions `τ > 0`, `ρ_λ > 0`, `tol > 0` and target
    /// finiteness.
    pub fn validate(&self) -> Result<()> {
        if !self.target.is_finite() {
            return Err(Error::InvalidInput(format!(
                "target ({}, {}) must be finite",
                self.target.x, self.target.y
            )));
        }
        for (name, v) in [
            ("tau", self.tau),
            ("rho_lambda", self.rho_lambda),
            ("tol", self.tol),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// One iterate of the static solver.
#[derive(Debug, Clone)]
pub struct StaticIterate {
    /// Shape with ghost slots (`q_0`, `q_{−1}` hold the anchor closure).
    pub q: NodeField<Vec2>,
    /// Tension; slots `1 … N` carry unknowns — unlike the dynamics, `σ_N` is
    /// solved for, not closed to zero.
    pub sigma: NodeField<f64>,
    /// Multiplier estimates `λ_k ≥ 0`; slots `1 … N−1` are updated, the rest
    /// stay zero.
    pub lambda: NodeField<f64>,
    /// Objective value.
    pub objective: f64,
    /// Outer iterations performed.
    pub outer_iters: usize,
}

impl StaticIterate {
    /// The straight-rod start: `q_k = (0, −s_k)`, zero tension, zero
    /// multipliers. The objective is a sentinel until a solver evaluates it.
    pub fn straight(grid: &Grid) -> Self {
        let n = grid.n();
        let ds = grid.ds();
        let mut q: NodeField<Vec2> = NodeField::from_fn(n, |k| {
            if (0..=n as isize).contains(&k) {
                Vec2::new(0.0, -grid.s(k as usize))
            } else {
                Vec2::ZERO
            }
        });
        q[-1] = q[0] + ds * E2;
        let qn = q[n as isize];
        let qn1 = q[n as isize - 1];
        q[n as isize + 1] = 2.0 * qn - qn1;
        StaticIterate {
            q,
            sigma: NodeField::zeros(n),
            lambda: NodeField::zeros(n),
            objective: f64::INFINITY,
            outer_iters: 0,
        }
    }
}

/// Knobs of [`static_optimize`].
#[derive(Debug, Clone)]
pub struct StaticOptions {
    /// Starting iterate; `None` means the straight rod with zero tension and
    /// zero multipliers.
    pub start: Option<StaticIterate>,
    /// Update the multipliers after every Newton step instead of after every
    /// converged inner solve (the accelerated variant). Convergence then
    /// additionally requires the stationarity residual to reach `inner_tol`.
    pub single_loop: bool,
    /// Residual max-norm tolerance of the inner quasi-Newton solve.
    pub inner_tol: f64,
    /// Iteration cap of one inner solve (applied per continuation stage).
    pub max_inner_iters: usize,
}

impl Default for StaticOptions {
    fn default() -> Self {
        StaticOptions {
            start: None,
            single_loop: false,
            inner_tol: tol::STATIC_INNER_TOL,
            max_inner_iters: tol::STATIC_INNER_MAX_ITERS,
        }
    }
}

/// Everything [`static_optimize`] produces.
#[derive(Debug, Clone)]
pub struct StaticSolution {
    /// Converged iterate: shape, tension, multipliers, final objective.
    pub iterate: StaticIterate,
    /// Stationary control regenerating the converged shape.
    pub control: StationaryControl,
    /// Whether control synthesis clamped at any node.
    pub control_clamped: bool,
    /// Objective value after each outer iteration, starting with the start's.
    pub j_history: Vec<f64>,
    /// Penalty escalations performed after inner-solve failures.
    pub escalations: usize,
}

/// The objective weight `1/ω̄_k²`, floored to stay finite where the control
/// authority (and with it `ω̄`) vanishes — notably at the free end.
fn floored_weight(omega_bar_k: f64) -> f64 {
    let w = omega_bar_k.max(tol::OMEGA_BAR_FLOOR);
    1.0 / (w * w)
}

/// The multiplier-augmented bending stiffness
/// `Λ(q_ss, λ) = 1/ω̄² + max{λ + (1/ρ_λ)(|q_ss|² − ω̄²), 0}`.
///
/// The objective weight uses the floored bound (see [`tol::OMEGA_BAR_FLOOR`]);
/// the augmentation term keeps the true bound, because it is the constraint
/// `|q_ss|² ≤ ω̄²` being enforced.
pub fn lambda_cap(q_ss: Vec2, lambda_k: f64, omega_bar_k: f64, rho_lambda: f64) -> f64 {
    floored_weight(omega_bar_k)
        + (lambda_k + (q_ss.norm_squared() - omega_bar_k * omega_bar_k) / rho_lambda).max(0.0)
}

/// The discrete objective
/// `J♯(q) = ½Δs Σ_{k=0}^N (1/ω̄_k²)|D²_c q_k|² + (1/2τ)|q_N − q*|²`
/// with the floored weight of [`lambda_cap`].
///
/// Requires the boundary closures applied so `D²_c` is defined at `k = 0`
/// and `k = N`.
pub fn j_sharp(q: &NodeField<Vec2>, prob: &StaticProblem, p: &ParamSet, grid: &Grid) -> f64 {
    let ds = grid.ds();
    let n = grid.n() as isize;
    let mut bend = 0.0;
    for k in 0..=n {
        let c = d2_central(q, k, ds);
        bend += floored_weight(p.omega_bar[k]) * c.norm_squared();
    }
    0.5 * ds * bend + (q[n] - prob.target).norm_squared() / (2.0 * prob.tau)
}

/// Stacked residual of the optimality system at an iterate.
///
/// Layout, for `k = 1 … N−1`: slots `3(k−1)`, `3(k−1)+1` hold the interior
/// equation at node `k` (x then y), slot `3(k−1)+2` the inextensibility row
/// `|D₋q_k|² − 1`. The node-`N` block carries the tip force balance (x, y)
/// and the last inextensibility row; the final two slots hold the tip-moment
/// closure. The residual vanishes exactly when the full optimality system
/// holds (the tip-moment substitution in the interior rows removes terms that
/// are zero whenever the moment row itself is zero).
pub fn residual(it: &StaticIterate, prob: &StaticProblem, p: &ParamSet, grid: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; 3 * grid.n() + 2];
    residual_into(&it.q, &it.sigma, &it.lambda, prob, p, grid, &mut out);
    out
}

fn residual_into(
    q: &NodeField<Vec2>,
    sigma: &NodeField<f64>,
    lambda: &NodeField<f64>,
    prob: &StaticProblem,
    p: &ParamSet,
    grid: &Grid,
    out: &mut [f64],
) {
    let n = grid.n();
    let ds = grid.ds();
    let ds2 = ds * ds;
    debug_assert_eq!(out.len(), 3 * n + 2);

    // (Λ C)_j for j = 0 … N; the tip entry stays zero by the moment-closure
    // substitution.
    let mut lc = vec![Vec2::ZERO; n + 1];
    for (j, slot) in lc.iter_mut().enumerate().take(n) {
        let ji = j as isize;
        let c = d2_central(q, ji, ds);
        *slot = lambda_cap(c, lambda[ji], p.omega_bar[ji], prob.rho_lambda) * c;
    }

    for k in 1..n {
        let ki = k as isize;
        let bend = (lc[k + 1] - 2.0 * lc[k] + lc[k - 1]) / ds2;
        let tens = (sigma[ki + 1] * d_minus(q, ki + 1, ds) - sigma[ki] * d_minus(q, ki, ds)) / ds;
        let f = bend - tens;
        let b = 3 * (k - 1);
        out[b] = f.x;
        out[b + 1] = f.y;
        out[b + 2] = d_minus(q, ki, ds).norm_squared() - 1.0;
    }

    let ni = n as isize;
    let tangent = d_minus(q, ni, ds);
    let balance = sigma[ni] * tangent + (q[ni] - prob.target) / prob.tau;
    let b = 3 * (n - 1);
    out[b] = balance.x;
    out[b + 1] = balance.y;
    out[b + 2] = tangent.norm_squared() - 1.0;

    let moment = q[ni + 1] - 2.0 * q[ni] + q[ni - 1];
    out[3 * n] = moment.x;
    out[3 * n + 1] = moment.y;
}

/// One multiplier ascent step:
/// `λ_k ← max{λ_k + (1/ρ_λ)(|D²_c q_k|² − ω̄_k²), 0}` for `k = 1 … N−1`.
///
/// Slots outside `1 … N−1` are zero in the returned field: the anchor node is
/// clamped and the two tip nodes carry no interior equation.
pub fn update_multipliers(it: &StaticIterate, p: &ParamSet, rho_lambda: f64) -> NodeField<f64> {
    let n = it.q.n();
    let ds = 1.0 / n as f64;
    let mut lam = NodeField::zeros(n);
    for k in 1..n {
        let ki = k as isize;
        let c = d2_central(&it.q, ki, ds);
        let wb = p.omega_bar[ki];
        lam[ki] = (it.lambda[ki] + (c.norm_squared() - wb * wb) / rho_lambda).max(0.0);
    }
    lam
}

/// Solves the optimality system at frozen multipliers by damped quasi-Newton
/// iteration.
///
/// # Algorithm
///
/// Each step assembles the banded Jacobian with `Λ` frozen at the current
/// iterate — the bending block is `Λ̄ D²_cD²_c`, every other block is the
/// exact derivative — factors it by banded LU and backtracks on the residual
/// max-norm (Armijo slope [`ARMIJO`], at most [`MAX_BACKTRACKS`] halvings,
/// falling back to the best trial seen). When the starting residual exceeds
/// [`tol::STATIC_COLD_RESIDUAL`], or the plain iteration stalls, the solve
/// runs through an adaptive homotopy in the target position and the tracking
/// weight (intermediate stages solved to [`tol::STATIC_STAGE_TOL`], each
/// warm-starting the next); `max_iter` applies per stage.
///
/// # Errors
///
/// [`Error::StaticInnerFailed`] with the last residual when the final stage
/// does not reach `inner_tol` within `max_iter` iterations;
/// [`Error::InvalidInput`] for malformed problems, tolerances or mismatched
/// shapes.
pub fn quasi_newton_solve(
    start: &StaticIterate,
    prob: &StaticProblem,
    p: &ParamSet,
    grid: &Grid,
    inner_tol: f64,
    max_iter: usize,
) -> Result<StaticIterate> {
    prob.validate()?;
    check_shapes(start, p, grid)?;
    if !inner_tol.is_finite() || inner_tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "inner tolerance {inner_tol} must be positive and finite"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput(
            "at least one inner iteration is required".to_string(),
        ));
    }
    let mut it = start.clone();
    let solver = InnerSolver {
        prob: prob.clone(),
        p,
        grid,
    };
    solver
        .solve_in_place(&mut it, inner_tol, max_iter)
        .map_err(|(residual, iters)| Error::StaticInnerFailed { residual, iters })?;
    repin_tip_ghost(&mut it.q, grid);
    it.objective = j_sharp(&it.q, prob, p, grid);
    Ok(it)
}

/// Full augmented-Lagrangian optimization: inner solves alternating with
/// multiplier updates until the objective settles, then control synthesis.
///
/// # Algorithm
///
/// Starting from [`StaticOptions::start`] (straight rod by default) with the
/// recorded objective as `J♯⁽⁰⁾`, each outer iteration solves the system at
/// frozen `λ` ([`quasi_newton_solve`] semantics), ascends the multipliers
/// ([`update_multipliers`]) and evaluates `J♯`; the loop stops when
/// `|J♯⁽ⁱ⁾ − J♯⁽ⁱ⁻¹⁾| < tol`. An inner-solve failure escalates the penalty
/// (`ρ_λ × 10`, at most [`tol::PENALTY_ESCALATIONS`] times) and resumes from
/// the last iterate. With [`StaticOptions::single_loop`] each outer iteration
/// performs a single damped Newton step instead of a full inner solve and
/// convergence additionally requires the residual to reach
/// [`StaticOptions::inner_tol`].
///
/// # Errors
///
/// Propagates the final [`Error::StaticInnerFailed`] once escalations are
/// exhausted; returns [`Error::StaticOuterCap`] when
/// [`tol::STATIC_OUTER_CAP`] outer iterations pass without settling.
pub fn static_optimize(
    prob: &StaticProblem,
    p: &ParamSet,
    grid: &Grid,
    opts: &StaticOptions,
) -> Result<StaticSolution> {
    prob.validate()?;
    if !opts.inner_tol.is_finite() || opts.inner_tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "inner tolerance {} must be positive and finite",
            opts.inner_tol
        )));
    }
    if opts.max_inner_iters == 0 {
        return Err(Error::InvalidInput(
            "at least one inner iteration is required".to_string(),
        ));
    }
    let mut it = match &opts.start {
        Some(s) => s.clone(),
        None => StaticIterate::straight(grid),
    };
    check_shapes(&it, p, grid)?;

    let mut rho = prob.rho_lambda;
    let mut escalations = 0usize;
    let mut history = vec![j_sharp(&it.q, prob, p, grid)];
    let mut outer = 0usize;
    let mut last_change = f64::INFINITY;

    loop {
        if outer == tol::STATIC_OUTER_CAP {
            return Err(Error::StaticOuterCap {
                cap: tol::STATIC_OUTER_CAP,
                last_change,
            });
        }
        let solver = InnerSolver {
            prob: StaticProblem {
                rho_lambda: rho,
                ..prob.clone()
            },
            p,
            grid,
        };
        let attempt = if opts.single_loop {
            solver.single_pass(&mut it, opts.inner_tol, opts.max_inner_iters)
        } else {
            solver.solve_in_place(&mut it, opts.inner_tol, opts.max_inner_iters)
        };
        match attempt {
            Ok(fnorm) => {
                let j = j_sharp(&it.q, prob, p, grid);
                history.push(j);
                outer += 1;
                it.outer_iters = outer;
                it.objective = j;
                let prev = history[history.len() - 2];
                last_change = (j - prev).abs();
                let residual_settled = !opts.single_loop || fnorm <= opts.inner_tol;
                if last_change < prob.tol && residual_settled {
                    // Return the multipliers the iterate actually converged
                    // under; updating them here would leave a solution whose
                    // residual is evaluated against multipliers it never saw.
                    break;
                }
                it.lambda = update_multipliers(&it, p, rho);
            }
            Err((residual, iters)) => {
                if escalations == tol::PENALTY_ESCALATIONS {
                    return Err(Error::StaticInnerFailed { residual, iters });
                }
                escalations += 1;
                rho *= 10.0;
                // The next attempt resumes from the mutated (partial) iterate.
            }
        }
    }

    repin_tip_ghost(&mut it.q, grid);
    let (control, control_clamped) = synthesize_control(&it.q, p, grid)?;
    Ok(StaticSolution {
        iterate: it,
        control,
        control_clamped,
        j_history: history,
        escalations,
    })
}

fn check_shapes(it: &StaticIterate, p: &ParamSet, grid: &Grid) -> Result<()> {
    let n = grid.n();
    if it.q.n() != n || it.sigma.n() != n || it.lambda.n() != n || p.n() != n {
        return Err(Error::InvalidInput(format!(
            "iterate ({} cells), material data ({} cells) and grid ({} cells) must agree",
            it.q.n(),
            p.n(),
            n
        )));
    }
    Ok(())
}

/// Re-imposes the tip-moment closure on the ghost slot. Converged iterates
/// satisfy it to the solver tolerance already; pinning it exactly removes the
/// residual ghost curvature before synthesis reads the tip node.
fn repin_tip_ghost(q: &mut NodeField<Vec2>, grid: &Grid) {
    let n = grid.n() as isize;
    let qn = q[n];
    let qn1 = q[n - 1];
    q[n + 1] = 2.0 * qn - qn1;
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// The inner solver bound to one effective problem (stage `τ`, current
/// `ρ_λ`) and shared material data.
struct InnerSolver<'a> {
    prob: StaticProblem,
    p: &'a ParamSet,
    grid: &'a Grid,
}

impl InnerSolver<'_> {
    /// Full inner solve; mutates the iterate in place so callers can resume
    /// from partial progress after a failure. Returns the final residual
    /// max-norm.
    ///
    /// Warm starts go straight to the Newton loop. A cold start — a large
    /// initial residual, or a direct attempt that stalls — is handed to the
    /// continuation driver instead.
    fn solve_in_place(
        &self,
        it: &mut StaticIterate,
        inner_tol: f64,
        max_iter: usize,
    ) -> std::result::Result<f64, (f64, usize)> {
        let StaticIterate {
            q, sigma, lambda, ..
        } = it;
        let n = self.grid.n();
        let mut f = vec![0.0; 3 * n + 2];
        residual_into(q, sigma, lambda, &self.prob, self.p, self.grid, &mut f);
        if inf_norm(&f) <= tol::STATIC_COLD_RESIDUAL {
            let q0 = q.clone();
            let s0 = sigma.clone();
            match self.newton_loop(q, sigma, lambda, inner_tol, max_iter) {
                Ok(r) => return Ok(r),
                Err(_) => {
                    // The plain iteration wandered; restart the homotopy from
                    // the unspoiled iterate.
                    *q = q0;
                    *sigma = s0;
                }
            }
        }
        self.continuation(q, sigma, lambda, inner_tol, max_iter)
    }

    /// Single-loop pass: cold starts warm up through the continuation driver
    /// at the stage tolerance, then exactly one damped Newton step is taken.
    /// Returns the residual after the step.
    fn single_pass(
        &self,
        it: &mut StaticIterate,
        inner_tol: f64,
        max_iter: usize,
    ) -> std::result::Result<f64, (f64, usize)> {
        let StaticIterate {
            q, sigma, lambda, ..
        } = it;
        let n = self.grid.n();
        let mut f = vec![0.0; 3 * n + 2];
        residual_into(q, sigma, lambda, &self.prob, self.p, self.grid, &mut f);
        let mut fnorm = inf_norm(&f);
        if fnorm > tol::STATIC_COLD_RESIDUAL {
            // The warm-up is a best-effort producer of a startable iterate;
            // its own convergence is not required.
            let warm_tol = tol::STATIC_STAGE_TOL.max(inner_tol);
            let _ = self.continuation(q, sigma, lambda, warm_tol, max_iter);
            residual_into(q, sigma, lambda, &self.prob, self.p, self.grid, &mut f);
            fnorm = inf_norm(&f);
        }
        self.newton_step(q, sigma, lambda, &mut f, fnorm)
            .map_err(|r| (r, 1))
    }

    /// Cold-start homotopy in two phases: first walk the target from the
    /// starting tip position to the requested point at a soft tracking
    /// weight, then stiffen the weight down to the requested `τ` at the full
    /// target.
    ///
    /// Both orderings matter. The straight-to-target problem at a stiff
    /// spring sits far outside any Newton basin, and sharpening the spring
    /// while the target is still moving steers the iterate through folds —
    /// partially curled shapes where the linearized operator loses rank and
    /// the tracked solution branch turns back. At `τ = 1` the shape family
    /// deforms benignly with the target, and once the full-target shape is in
    /// hand the `τ` descent keeps the tip essentially pinned. Each phase is
    /// adaptive: the target increment doubles after success and halves after
    /// failure (giving up below [`CONTINUATION_MIN_STEP`]); the `τ` factor
    /// retreats from decades toward unity (giving up near `1`). A failed
    /// stage restores the pre-stage iterate before retrying.
    fn continuation(
        &self,
        q: &mut NodeField<Vec2>,
        sigma: &mut NodeField<f64>,
        lambda: &NodeField<f64>,
        inner_tol: f64,
        max_iter: usize,
    ) -> std::result::Result<f64, (f64, usize)> {
        let n = self.grid.n() as isize;
        let tip0 = q[n];
        let stage_tol = tol::STATIC_STAGE_TOL.max(inner_tol);
        let tau_soft = self.prob.tau.max(1.0);
        let solve_stage = |prob: StaticProblem,
                           q: &mut NodeField<Vec2>,
                           sigma: &mut NodeField<f64>,
                           tol_here: f64|
         -> std::result::Result<f64, (f64, usize)> {
            let stage = InnerSolver {
                prob,
                p: self.p,
                grid: self.grid,
            };
            let q_saved = q.clone();
            let s_saved = sigma.clone();
            let outcome = stage.newton_loop(q, sigma, lambda, tol_here, max_iter);
            if outcome.is_err() {
                *q = q_saved;
                *sigma = s_saved;
            }
            outcome
        };

        // Phase one: target walk at the soft spring.
        let soft_is_final = tau_soft == self.prob.tau;
        let mut alpha = 0.0;
        let mut step = CONTINUATION_STEP0;
        let mut result;
        loop {
            let a = (alpha + step).min(1.0);
            let stage_prob = StaticProblem {
                target: (1.0 - a) * tip0 + a * self.prob.target,
                tau: tau_soft,
                ..self.prob.clone()
            };
            let tol_here = if a >= 1.0 && soft_is_final {
                inner_tol
            } else {
                stage_tol
            };
            result = solve_stage(stage_prob, q, sigma, tol_here);
            match result {
                Ok(r) => {
                    if a >= 1.0 {
                        if soft_is_final {
                            return Ok(r);
                        }
                        break;
                    }
                    alpha = a;
                    step *= 2.0;
                }
                Err(fail) => {
                    step *= 0.5;
                    if step < CONTINUATION_MIN_STEP {
                        return Err(fail);
                    }
                }
            }
        }

        // Phase two: spring stiffening at the full target.
        let mut tau_cur = tau_soft;
        let mut factor = 0.1;
        loop {
            let tau_next = (tau_cur * factor).max(self.prob.tau);
            let is_final = tau_next <= self.prob.tau;
            let stage_prob = StaticProblem {
                tau: tau_next,
                ..self.prob.clone()
            };
            let tol_here = if is_final { inner_tol } else { stage_tol };
            match solve_stage(stage_prob, q, sigma, tol_here) {
                Ok(r) => {
                    if is_final {
                        return Ok(r);
                    }
                    tau_cur = tau_next;
                    factor = 0.1;
                }
                Err(fail) => {
                    factor = factor.sqrt();
                    if factor > 0.95 {
                        return Err(fail);
                    }
                }
            }
        }
    }

    /// Damped Newton iteration to a residual target. Returns the final
    /// residual max-norm, or the pair (residual, iterations completed) on
    /// failure — including an early bail-out when [`STALL_WINDOW`]
    /// iterations pass without meaningful progress.
    fn newton_loop(
        &self,
        q: &mut NodeField<Vec2>,
        sigma: &mut NodeField<f64>,
        lambda: &NodeField<f64>,
        tol_target: f64,
        max_iter: usize,
    ) -> std::result::Result<f64, (f64, usize)> {
        let n = self.grid.n();
        let mut f = vec![0.0; 3 * n + 2];
        residual_into(q, sigma, lambda, &self.prob, self.p, self.grid, &mut f);
        let mut fnorm = inf_norm(&f);
        let mut best = fnorm;
        let mut last_improved = 0usize;
        for iter in 0..max_iter {
            if fnorm <= tol_target {
                return Ok(fnorm);
            }
            fnorm = self
                .newton_step(q, sigma, lambda, &mut f, fnorm)
                .map_err(|r| (r, iter))?;
            if std::env::var_os("STATIC_TRACE").is_some() {
                let ds = self.grid.ds();
                let nn = self.grid.n() as isize;
                let cmax = (0..nn)
                    .map(|j| d2_central(&*q, j, ds).norm())
                    .fold(0.0f64, f64::max);
                let smin = (1..=nn).map(|k| sigma[k]).fold(f64::INFINITY, f64::min);
                let smax = (1..=nn).map(|k| sigma[k]).fold(f64::NEG_INFINITY, f64::max);
                eprintln!(
                    "    it {iter:3} tau {:9.3e} |F| {fnorm:13.6e} maxC {cmax:9.3e} sigma [{smin:+9.2e}, {smax:+9.2e}]",
                    self.prob.tau
                );
            }
            if fnorm < 0.9 * best {
                best = fnorm;
                last_improved = iter;
            } else if iter >= last_improved + STALL_WINDOW {
                return Err((fnorm, iter + 1));
            }
        }
        if fnorm <= tol_target {
            Ok(fnorm)
        } else {
            Err((fnorm, max_iter))
        }
    }

    /// One damped Newton step: assemble, factor, backtrack. Commits the best
    /// trial seen and returns its residual norm; fails only when the Jacobian
    /// is singular or no finite trial exists.
    fn newton_step(
        &self,
        q: &mut NodeField<Vec2>,
        sigma: &mut NodeField<f64>,
        lambda: &NodeField<f64>,
        f: &mut Vec<f64>,
        fnorm: f64,
    ) -> std::result::Result<f64, f64> {
        let n = self.grid.n();
        let jac = assemble_jacobian(q, sigma, lambda, &self.prob, self.p, self.grid);
        let lu = jac.factor().map_err(|_| fnorm)?;
        let delta = lu.solve(f);

        let mut best: Option<(f64, NodeField<Vec2>, NodeField<f64>, Vec<f64>)> = None;
        let mut t = 1.0;
        for _ in 0..MAX_BACKTRACKS {
            let (tq, ts) = stepped(q, sigma, &delta, t, n);
            let mut tf = vec![0.0; f.len()];
            residual_into(&tq, &ts, lambda, &self.prob, self.p, self.grid, &mut tf);
            let tn = inf_norm(&tf);
            if tn.is_finite() {
                if tn <= (1.0 - ARMIJO * t) * fnorm {
                    *q = tq;
                    *sigma = ts;
                    *f = tf;
                    return Ok(tn);
                }
                if best.as_ref().is_none_or(|b| tn < b.0) {
                    best = Some((tn, tq, ts, tf));
                }
            }
            t *= 0.5;
        }
        match best {
            Some((bn, bq, bs, bf)) => {
                *q = bq;
                *sigma = bs;
                *f = bf;
                Ok(bn)
            }
            None => Err(fnorm),
        }
    }
}

/// The iterate moved by `−t·δ` in the interleaved unknown layout
/// `[q_k, σ_k]_{k=1…N}, q_{N+1}`.
fn stepped(
    q: &NodeField<Vec2>,
    sigma: &NodeField<f64>,
    delta: &[f64],
    t: f64,
    n: usize,
) -> (NodeField<Vec2>, NodeField<f64>) {
    let mut q2 = q.clone();
    let mut s2 = sigma.clone();
    for k in 1..=n {
        let b = 3 * (k - 1);
        let ki = k as isize;
        q2[ki] -= t * Vec2::new(delta[b], delta[b + 1]);
        s2[ki] -= t * delta[b + 2];
    }
    let gi = (n + 1) as isize;
    q2[gi] -= t * Vec2::new(delta[3 * n], delta[3 * n + 1]);
    (q2, s2)
}

/// The frozen-Λ Jacobian in banded storage (six diagonals each side).
///
/// Unknown columns interleave `[q_k.x, q_k.y, σ_k]` for `k = 1 … N` followed
/// by `q_{N+1}`; rows follow the residual layout of [`residual`]. The bending
/// block freezes `Λ` at the supplied iterate; tension, inextensibility,
/// balance and moment rows carry their exact derivatives.
fn assemble_jacobian(
    q: &NodeField<Vec2>,
    sigma: &NodeField<f64>,
    lambda: &NodeField<f64>,
    prob: &StaticProblem,
    p: &ParamSet,
    grid: &Grid,
) -> BandMat {
    let n = grid.n();
    let ds = grid.ds();
    let ds2 = ds * ds;
    let ds4 = ds2 * ds2;
    let dim = 3 * n + 2;
    let mut a = BandMat::zeros(dim, 6, 6);

    // Frozen stiffness Λ̄_j, j = 0 … N−1 (the substituted tip entry never
    // enters the interior rows).
    let lam_bar: Vec<f64> = (0..n)
        .map(|j| {
            let ji = j as isize;
            lambda_cap(d2_central(q, ji, ds), lambda[ji], p.omega_bar[ji], prob.rho_lambda)
        })
        .collect();

    let col_q = |j: usize, c: usize| 3 * (j - 1) + c; // j = 1 … N
    let col_tip = |c: usize| 3 * n + c; // q_{N+1}
    let col_sig = |k: usize| 3 * (k - 1) + 2;

    for k in 1..n {
        let ki = k as isize;
        let rx = 3 * (k - 1);
        let ry = rx + 1;
        let ri = rx + 2;

        // Bending block D²_c(Λ̄ D²_c δq)_k, tip term dropped.
        for (j, wj) in [(k - 1, 1.0), (k, -2.0), (k + 1, 1.0)] {
            if j == n {
                continue;
            }
            let scale = wj * lam_bar[j] / ds4;
            for (m, wm) in [(j as isize - 1, 1.0), (j as isize, -2.0), (j as isize + 1, 1.0)] {
                if m < 1 {
                    continue; // q_0, q_{−1} are fixed by the anchor closure
                }
                let mu = m as usize;
                a.add(rx, col_q(mu, 0), scale * wm);
                a.add(ry, col_q(mu, 1), scale * wm);
            }
        }

        // Tension block −D₊(σ D₋δq)_k and the σ columns −D₊(δσ D₋q)_k.
        let s_k = sigma[ki];
        let s_k1 = sigma[ki + 1];
        a.add(rx, col_q(k + 1, 0), -s_k1 / ds2);
        a.add(ry, col_q(k + 1, 1), -s_k1 / ds2);
        a.add(rx, col_q(k, 0), (s_k1 + s_k) / ds2);
        a.add(ry, col_q(k, 1), (s_k1 + s_k) / ds2);
        if k >= 2 {
            a.add(rx, col_q(k - 1, 0), -s_k / ds2);
            a.add(ry, col_q(k - 1, 1), -s_k / ds2);
        }
        let t_k = d_minus(q, ki, ds);
        let t_k1 = d_minus(q, ki + 1, ds);
        a.add(rx, col_sig(k + 1), -t_k1.x / ds);
        a.add(ry, col_sig(k + 1), -t_k1.y / ds);
        a.add(rx, col_sig(k), t_k.x / ds);
        a.add(ry, col_sig(k), t_k.y / ds);

        // Inextensibility row at k.
        a.add(ri, col_q(k, 0), 2.0 * t_k.x / ds);
        a.add(ri, col_q(k, 1), 2.0 * t_k.y / ds);
        if k >= 2 {
            a.add(ri, col_q(k - 1, 0), -2.0 * t_k.x / ds);
            a.add(ri, col_q(k - 1, 1), -2.0 * t_k.y / ds);
        }
    }

    // Node-N block: tip force balance and the last inextensibility row.
    let ni = n as isize;
    let t_n = d_minus(q, ni, ds);
    let s_n = sigma[ni];
    let rbx = 3 * (n - 1);
    let rby = rbx + 1;
    let rin = rbx + 2;
    a.add(rbx, col_q(n, 0), s_n / ds + 1.0 / prob.tau);
    a.add(rby, col_q(n, 1), s_n / ds + 1.0 / prob.tau);
    a.add(rbx, col_q(n - 1, 0), -s_n / ds);
    a.add(rby, col_q(n - 1, 1), -s_n / ds);
    a.add(rbx, col_sig(n), t_n.x);
    a.add(rby, col_sig(n), t_n.y);
    a.add(rin, col_q(n, 0), 2.0 * t_n.x / ds);
    a.add(rin, col_q(n, 1), 2.0 * t_n.y / ds);
    a.add(rin, col_q(n - 1, 0), -2.0 * t_n.x / ds);
    a.add(rin, col_q(n - 1, 1), -2.0 * t_n.y / ds);

    // Tip-moment closure rows.
    let rmx = 3 * n;
    let rmy = rmx + 1;
    a.add(rmx, col_tip(0), 1.0);
    a.add(rmy, col_tip(1), 1.0);
    a.add(rmx, col_q(n, 0), -2.0);
    a.add(rmy, col_q(n, 1), -2.0);
    a.add(rmx, col_q(n - 1, 0), 1.0);
    a.add(rmy, col_q(n - 1, 1), 1.0);

    a
}
