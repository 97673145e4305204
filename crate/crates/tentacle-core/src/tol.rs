//! Centralized numerical tolerances and iteration limits.
//!
//! Every magic number that decides convergence, degeneracy or acceptance lives
//! here with a justification, so the relationships between solver layers stay
//! auditable in one place. Keep the ordering invariants checked by the tests
//! in mind when tuning: inner solves must be strictly tighter than the outer
//! quantities that consume them.

/// Newton convergence threshold for the per-step position/tension solve,
/// measured as the max-norm of the full nonlinear residual.
///
/// The residual mixes position rows (O(Δt²) magnitudes) and inextensibility
/// rows (O(1) magnitudes); 1e-10 keeps the constraint satisfied to ten digits
/// without demanding the last two bits from the linear algebra.
pub const NEWTON_TOL: f64 = 1e-10;

/// Newton iteration cap for one time step. The position system is nearly
/// linear at practical time steps and two to four iterations are typical, so
/// fifty means the step has genuinely diverged.
pub const NEWTON_MAX_ITERS: usize = 50;

/// Maximum allowed violation of `|D₋q_k| = 1` in user-supplied initial data.
pub const INITIAL_CONSTRAINT_TOL: f64 = 1e-8;

/// Below this magnitude a discrete curvature vector counts as zero during
/// control synthesis at nodes where the curvature bound vanishes.
pub const SYNTHESIS_CURVATURE_TOL: f64 = 1e-8;

/// Effective curvature bounds `ω̄_k` whose spread stays below this threshold
/// (tip node excluded, where `μ = 0` forces `ω̄ = 0`) count as constant, which
/// is the regime the reachable-set construction covers.
pub const OMEGA_BAR_CONST_TOL: f64 = 1e-12;

/// Floor substituted for `ω̄_k²` in the static objective weight `1/ω̄_k²` so
/// the tip node (`ω̄_N = 0`) contributes a large but finite penalty.
pub const OMEGA_BAR_FLOOR: f64 = 1e-3;

/// Inner quasi-Newton residual tolerance of the static solver. Sits exactly
/// at the advertised stationarity residual, which the outer loop's final
/// iterate inherits. It cannot be much tighter: freezing the stiffness `Λ`
/// in the Jacobian leaves the iteration blind to the activation kink of
/// `max{λ + (|q_ss|² − ω̄²)/ρ_λ, 0}`, so marginally active curvature
/// constraints floor the reachable residual near `1e-9` (the kink noise
/// amplified by the `4/Δs²` of the bending stencil).
pub const STATIC_INNER_TOL: f64 = 1e-8;

/// Iteration cap for one inner quasi-Newton solve of the static optimizer.
pub const STATIC_INNER_MAX_ITERS: usize = 200;

/// Residual tolerance for the intermediate stages of the cold-start homotopy
/// inside the static inner solve. The intermediate systems only provide warm
/// starts, so six digits is ample; the final stage always runs at the
/// caller's tolerance.
pub const STATIC_STAGE_TOL: f64 = 1e-6;

/// A static inner solve whose starting residual exceeds this max-norm counts
/// as a cold start and skips the direct Newton attempt in favour of the
/// target homotopy. Warm restarts (outer multiplier updates, penalty
/// escalations) perturb the residual by orders of magnitude less, while the
/// straight-rod start against a generic target sits at
/// `|q_N − q*|/τ ≈ 1e3..1e4`.
pub const STATIC_COLD_RESIDUAL: f64 = 1e2;

/// Outer (multiplier update) iteration cap of the static optimizer.
pub const STATIC_OUTER_CAP: usize = 500;

/// How many times the static solver may multiply the penalty parameter by ten
/// after an inner-solve failure before giving up.
pub const PENALTY_ESCALATIONS: usize = 3;

/// Iteration cap for the projected gradient descent of the dynamic optimizer.
pub const DESCENT_CAP: usize = 5000;

/// Curvature bound below which the reachable set degenerates to a sliver of
/// thickness `O(ω̄₀²)` around the straight tip; the boundary construction then
/// returns the closed-form leaf envelope directly because intersecting an
/// arrangement at that scale is ill-conditioned.
pub const REACH_DEGENERATE_OMEGA: f64 = 1e-2;

/// Absolute node-merge radius when identifying coincident intersection points
/// in the boundary arrangement (all tip coordinates are O(1)).
pub const REACH_NODE_MERGE: f64 = 1e-9;

/// Bounded arrangement faces with less enclosed area than this are never
/// tested for unreachability: they are discretization slivers, far below the
/// area of any genuine unreachable inclusion at the curvature bounds of
/// interest (the inclusion at `ω̄₀ = 2π` has area ≈ 0.24).
pub const REACH_FACE_AREA_MIN: f64 = 1e-6;

/// A face representative counts as reachable when the polished two- or
/// three-segment inverse problem lands within this distance of it. Genuinely
/// reachable points polish to ~1e-12; representatives inside an unreachable
/// inclusion stay at least [`REACH_REP_CLEARANCE`] away because the inclusion
/// is bounded by reachable tips.
pub const REACH_MEMBERSHIP_TOL: f64 = 1e-6;

/// Minimum clearance of a face-representative point from the face boundary.
/// Keeps the membership decision margin: an unreachable representative is at
/// least this far from the reachable set, an order of magnitude above
/// [`REACH_MEMBERSHIP_TOL`].
pub const REACH_REP_CLEARANCE: f64 = 1e-5;
