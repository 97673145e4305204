//! Reachable set of the rod tip under a constant curvature bound.
//!
//! At equilibrium the rod is an inextensible unit-speed planar curve clamped
//! at the origin pointing straight down, whose tangent angle obeys
//!
//! ```text
//!     θ(0) = 0,    θ'(s) = ω̄₀ u(s),    |u(s)| ≤ 1,
//!     tip(u) = ∫₀¹ τ(θ(s)) ds,         τ(θ) = (sin θ, -cos θ).
//! ```
//!
//! The set `R'` of tips over all admissible `u` is the *reachable set* for
//! the curvature bound `ω̄₀`. Its boundary is contained in the tips of the
//! four one-switch extremal (Dubins-type) controls: a boundary tip admits no
//! two-sided variation, which forces `u` to be bang-bang with at most one
//! switch, either onto the opposite bang (`CC`, arc-arc) or onto zero (`CL`,
//! arc-line). Sweeping the switch location `s̄ ∈ [0, 1]` for `ū = ±1` in each
//! family traces four curves whose arrangement contains every boundary point.
//!
//! # Geometry of the construction
//!
//! The four extremal curves all start at the straight-drop tip `(0, -1)`
//! (at `s̄ = 0` for `CL`; the `CC` curves start at the full-circle-arc tip)
//! and the complement of `R'` can be reconstructed from their planar
//! arrangement alone:
//!
//! * every point on the curves is itself a reachable tip, so no curve strand
//!   can pass through a connected component of the complement of `R'`;
//! * conversely every boundary point of `R'` lies on a curve.
//!
//! Hence each component of the complement is exactly one face of the
//! arrangement. The unbounded face is the exterior; its boundary cycle is the
//! outer loop. Any bounded face is either inside `R'` or an unreachable
//! inclusion ("hole"), which a membership probe decides: a damped Gauss-Newton
//! solve for a two-segment (fallback: three-segment) piecewise-constant
//! control whose tip hits a representative interior point of the face.
//! Reachable representatives polish to residuals near machine precision;
//! unreachable ones stay a finite distance away, so the decision threshold
//! [`crate::tol::REACH_MEMBERSHIP_TOL`] has orders of magnitude of margin.
//!
//! Empirically the inclusion exists for `ω̄₀` between `1 + 3π/2 ≈ 5.712`
//! (where the two near-axis prongs of the boundary first touch; at that value
//! the arc-line curve is tangent to the symmetry axis) and `≈ 6.302` (where
//! the inclusion shrinks to a point and the set becomes simply connected
//! again). Below that window the near-axis indentation stays open to the
//! exterior; above it the set fills toward the unit disk.
//!
//! # Degenerate limit
//!
//! As `ω̄₀ → 0` the reachable set collapses onto the point `(0, -1)`: it is a
//! leaf-shaped sliver of width `O(ω̄₀)` and thickness `O(ω̄₀²)`. Intersecting
//! an arrangement at that scale is ill-conditioned, so below
//! [`crate::tol::REACH_DEGENERATE_OMEGA`] the boundary is assembled directly
//! from its known closed-form circuit: the arc-line curve out to the
//! full-arc tip, then the mirrored arc-arc curve back to the symmetry axis,
//! then the mirror image.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tol;
use crate::vec2::Vec2;

/// Which one-switch extremal family a path belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Arc followed by a straight segment (`CL`).
    ArcLine,
    /// Arc followed by an opposite arc (`CC`).
    ArcArc,
}

impl std::fmt::Display for PathKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathKind::ArcLine => write!(f, "CL"),
            PathKind::ArcArc => write!(f, "CC"),
        }
    }
}

/// A one-switch extremal control: full bang `ū` on `[0, s̄]`, then straight
/// or opposite bang on `[s̄, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DubinsControl {
    /// Family.
    pub kind: PathKind,
    /// Bang value, `±1`.
    pub ubar: f64,
    /// Switch location in `[0, 1]`.
    pub sbar: f64,
}

/// One closed loop of the reachable-set boundary.
#[derive(Debug, Clone)]
pub struct BoundaryLoop {
    /// Polyline vertices (closed implicitly). Outer loops are
    /// counter-clockwise, holes clockwise.
    pub points: Vec<Vec2>,
    /// True when the loop bounds an unreachable inclusion.
    pub is_hole: bool,
}

/// The reachable-set boundary at one curvature bound.
#[derive(Debug, Clone)]
pub struct ReachBoundary {
    /// The curvature bound `ω̄₀`.
    pub omega_bar0: f64,
    /// Boundary loops (outer loops and holes).
    pub loops: Vec<BoundaryLoop>,
}

/// Classification of a point against a reachable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// Interior of the reachable set.
    Inside,
    /// Within resolution distance of the boundary.
    Boundary,
    /// Outside the reachable set.
    Outside,
}

/// Displacement and exit angle of a constant-curvature piece.
///
/// For entry angle `θ₀`, turning rate `a = ω̄₀ u` and arc length `L`:
///
/// ```text
///     Δ = ∫₀ᴸ τ(θ₀ + a s) ds = 2 (sin(aL/2) / a) τ(θ₀ + aL/2),
/// ```
///
/// the chord form of the circular-arc integral. It is free of cancellation
/// for every rate (the naive `(cos θ₀ - cos θ₁)/a` loses half the mantissa
/// near `a = 0`) and, because `sin` is odd and `cos` even, negating the rate
/// negates the `x` component exactly: mirror controls give bitwise-mirrored
/// tips.
fn arc_displacement(theta0: f64, rate: f64, len: f64) -> (Vec2, f64) {
    let half_turn = 0.5 * rate * len;
    let chord = if half_turn.abs() < 1e-8 {
        // sin(h)/h Taylor truncation error h⁴/120 ≤ 1e-33 here.
        len * (1.0 - half_turn * half_turn / 6.0)
    } else {
        2.0 * half_turn.sin() / rate
    };
    let theta_mid = theta0 + half_turn;
    (
        Vec2::new(chord * theta_mid.sin(), -chord * theta_mid.cos()),
        theta0 + rate * len,
    )
}

/// Tip position of a one-switch extremal control, in closed form.
///
/// The first piece turns at rate `ω̄₀ ū` for length `s̄`; the second piece is
/// straight (`ArcLine`) or turns at `-ω̄₀ ū` (`ArcArc`) for length `1 - s̄`.
/// At `ω̄₀ = 0` every control yields the straight drop `(0, -1)`.
pub fn extremal_tip(control: DubinsControl, omega_bar0: f64) -> Vec2 {
    let (d1, theta) = arc_displacement(0.0, omega_bar0 * control.ubar, control.sbar);
    let second_rate = match control.kind {
        PathKind::ArcLine => 0.0,
        PathKind::ArcArc => -omega_bar0 * control.ubar,
    };
    let (d2, _) = arc_displacement(theta, second_rate, 1.0 - control.sbar);
    d1 + d2
}

/// Tip position by left-endpoint rectangular quadrature on `cells` cells.
///
/// The control is projected onto the grid by left-endpoint sampling: cell `j`
/// uses the bang value when `j/cells < s̄` (strictly), the post-switch value
/// otherwise. The tangent angle is advanced cell by cell, so the quadrature
/// is the tip of the discrete rod whose curvature is the sampled control —
/// the discrete counterpart of the closed form, converging at first order.
///
/// For `s̄ = 0` in the `ArcLine` family the sampled control is identically
/// zero and the sum collapses to `cells` copies of `τ(0)/cells`, i.e. the
/// straight drop `(0, -1)` up to summation round-off.
///
/// # Panics
///
/// When `cells < 2`.
pub fn extremal_tip_quadrature(control: DubinsControl, omega_bar0: f64, cells: usize) -> Vec2 {
    assert!(cells >= 2, "quadrature needs at least 2 cells, got {cells}");
    let ds = 1.0 / cells as f64;
    let switched = match control.kind {
        PathKind::ArcLine => 0.0,
        PathKind::ArcArc => -control.ubar,
    };
    let mut theta = 0.0_f64;
    let mut q = Vec2::ZERO;
    for j in 0..cells {
        let s = j as f64 * ds;
        let u = if s < control.sbar { control.ubar } else { switched };
        q += ds * Vec2::new(theta.sin(), -theta.cos());
        theta += omega_bar0 * u * ds;
    }
    q
}

/// Boundary of the reachable set at curvature bound `omega_bar0`.
///
/// `resolution` is the number of tip samples per extremal curve (at least 8).
///
/// # Algorithm
///
/// 1. Sample the four extremal curves; the `ū = -1` curves are exact mirror
///    images of the `ū = +1` curves, so they are mirrored rather than
///    re-evaluated, which makes the vertex set symmetric to the last bit.
/// 2. Intersect all sampled segments (spatial binning for the candidate
///    pairs), split segments at the cuts, and merge coincident endpoints
///    into nodes within [`tol::REACH_NODE_MERGE`].
/// 3. Enumerate the faces of the resulting planar graph by half-edge
///    traversal. With outgoing half-edges sorted by direction angle and
///    `next(h)` the clockwise successor of the twin of `h`, every face is
///    kept on the left of its cycle: bounded faces come out
///    counter-clockwise (positive signed area), the unique unbounded face
///    clockwise (negative area).
/// 4. The outer loop is the unbounded face's cycle, reversed to
///    counter-clockwise. Every bounded face with area above
///    [`tol::REACH_FACE_AREA_MIN`] is probed at an interior representative
///    point; faces whose representative is not a reachable tip are emitted
///    as holes (clockwise).
///
/// Below [`tol::REACH_DEGENERATE_OMEGA`] the closed-form leaf circuit is
/// returned instead (see the module documentation).
///
/// # Errors
///
/// [`Error::InvalidInput`] when `omega_bar0` is not finite and positive or
/// `resolution < 8`.
pub fn reachable_boundary(omega_bar0: f64, resolution: usize) -> Result<ReachBoundary> {
    if !omega_bar0.is_finite() || omega_bar0 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "curvature bound must be finite and positive, got {omega_bar0}"
        )));
    }
    if resolution < 8 {
        return Err(Error::InvalidInput(format!(
            "boundary resolution must be at least 8, got {resolution}"
        )));
    }
    let loops = if omega_bar0 < tol::REACH_DEGENERATE_OMEGA {
        vec![BoundaryLoop { points: degenerate_leaf(omega_bar0, resolution), is_hole: false }]
    } else {
        arrangement_boundary(omega_bar0, resolution)
    };
    Ok(ReachBoundary { omega_bar0, loops })
}

/// Classify a point against a computed boundary.
///
/// Membership is decided by even-odd ray parity over all loops together, so
/// a point enclosed by both the outer loop and a hole loop is outside. The
/// `Boundary` verdict is returned within twice the mean boundary segment
/// length — the resolution of the polyline itself.
///
/// # Errors
///
/// [`Error::InvalidInput`] when the point is not finite or the boundary is
/// malformed (no loops, a loop with fewer than three vertices, a non-finite
/// vertex, or a non-positive curvature bound).
pub fn contains(p: Vec2, boundary: &ReachBoundary) -> Result<Membership> {
    if !p.is_finite() {
        return Err(Error::InvalidInput(format!("query point must be finite, got {p:?}")));
    }
    if !boundary.omega_bar0.is_finite() || boundary.omega_bar0 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "boundary has non-positive curvature bound {}",
            boundary.omega_bar0
        )));
    }
    if boundary.loops.is_empty() {
        return Err(Error::InvalidInput("boundary has no loops".to_string()));
    }
    let mut total_len = 0.0;
    let mut segments = 0usize;
    for lp in &boundary.loops {
        if lp.points.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "boundary loop has {} vertices, need at least 3",
                lp.points.len()
            )));
        }
        if lp.points.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidInput("boundary loop has a non-finite vertex".to_string()));
        }
        let n = lp.points.len();
        for i in 0..n {
            total_len += (lp.points[(i + 1) % n] - lp.points[i]).norm();
        }
        segments += n;
    }
    let band = 2.0 * total_len / segments as f64;
    let dist = boundary
        .loops
        .iter()
        .map(|lp| dist_to_closed_polyline(p, &lp.points))
        .fold(f64::INFINITY, f64::min);
    if dist <= band {
        return Ok(Membership::Boundary);
    }
    let mut inside = false;
    for lp in &boundary.loops {
        if point_in_polygon(p, &lp.points) {
            inside = !inside;
        }
    }
    Ok(if inside { Membership::Inside } else { Membership::Outside })
}

// ---------------------------------------------------------------------------
// Closed-form leaf for the degenerate limit
// ---------------------------------------------------------------------------

/// Leaf circuit for tiny curvature bounds, from the known branch structure:
/// arc-line out to the full-arc tip, mirrored arc-arc back to the symmetry
/// axis, then the mirror image; counter-clockwise.
fn degenerate_leaf(omega_bar0: f64, resolution: usize) -> Vec<Vec2> {
    let n = resolution;
    let step = |i: usize| i as f64 / (n - 1) as f64;
    let mut right: Vec<Vec2> = Vec::with_capacity(2 * n);
    for i in 0..n {
        right.push(extremal_tip(
            DubinsControl { kind: PathKind::ArcLine, ubar: 1.0, sbar: step(i) },
            omega_bar0,
        ));
    }
    // Continue along the mirrored arc-arc curve until it crosses the axis
    // (both curves meet at the full-arc tip, the last point above).
    let ccm = |sbar: f64| {
        let p = extremal_tip(DubinsControl { kind: PathKind::ArcArc, ubar: 1.0, sbar }, omega_bar0);
        Vec2::new(-p.x, p.y)
    };
    let mut prev = ccm(0.0);
    for i in 1..n {
        let p = ccm(step(i));
        if p.x <= 0.0 {
            let t = prev.x / (prev.x - p.x);
            right.push(Vec2::new(0.0, prev.y + t * (p.y - prev.y)));
            break;
        }
        right.push(p);
        prev = p;
    }
    let mut pts = right.clone();
    for p in right[1..right.len() - 1].iter().rev() {
        pts.push(Vec2::new(-p.x, p.y));
    }
    pts
}

// ---------------------------------------------------------------------------
// Arrangement construction
// ---------------------------------------------------------------------------

/// Tips of the four extremal curves, `resolution` samples each, in the fixed
/// order arc-line `+`, arc-line `-`, arc-arc `+`, arc-arc `-`. The minus
/// curves are exact mirrors (negated `x`) of the plus curves.
fn sample_extremal_curves(omega_bar0: f64, resolution: usize) -> [Vec<Vec2>; 4] {
    let sbar = |i: usize| i as f64 / (resolution - 1) as f64;
    let trace = |kind: PathKind| -> Vec<Vec2> {
        (0..resolution)
            .map(|i| extremal_tip(DubinsControl { kind, ubar: 1.0, sbar: sbar(i) }, omega_bar0))
            .collect()
    };
    let cl_p = trace(PathKind::ArcLine);
    let cc_p = trace(PathKind::ArcArc);
    let mirror = |c: &[Vec2]| c.iter().map(|p| Vec2::new(-p.x, p.y)).collect::<Vec<_>>();
    let cl_m = mirror(&cl_p);
    let cc_m = mirror(&cc_p);
    [cl_p, cl_m, cc_p, cc_m]
}

/// Merges nearby points into shared node ids via a uniform grid of cell size
/// equal to the merge radius (checking the 3×3 neighborhood covers the whole
/// merge ball).
struct NodeRegistry {
    coords: Vec<Vec2>,
    grid: HashMap<(i64, i64), Vec<usize>>,
    merge: f64,
}

impl NodeRegistry {
    fn new(merge: f64) -> Self {
        NodeRegistry { coords: Vec::new(), grid: HashMap::new(), merge }
    }

    fn cell(&self, p: Vec2) -> (i64, i64) {
        ((p.x / self.merge).floor() as i64, (p.y / self.merge).floor() as i64)
    }

    fn insert(&mut self, p: Vec2) -> usize {
        let (cx, cy) = self.cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &id in ids {
                        if (self.coords[id] - p).norm() <= self.merge {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.coords.len();
        self.coords.push(p);
        self.grid.entry((cx, cy)).or_default().push(id);
        id
    }
}

/// Proper intersection parameters `(t, u)` of segments `a..b` and `c..d`,
/// each clamped to `[0, 1]`; `None` for (near-)parallel pairs.
fn seg_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den.abs() <= 1e-14 * r.norm() * s.norm() {
        return None;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    let pad = 1e-12;
    if (-pad..=1.0 + pad).contains(&t) && (-pad..=1.0 + pad).contains(&u) {
        Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// Planar graph of the four sampled curves: nodes and undirected edges after
/// splitting every segment at its intersections with all others.
fn build_arrangement(curves: &[Vec<Vec2>; 4]) -> (Vec<Vec2>, Vec<(usize, usize)>) {
    struct RawSeg {
        a: Vec2,
        b: Vec2,
        curve: usize,
        index: usize,
    }
    let mut segs: Vec<RawSeg> = Vec::new();
    for (ci, curve) in curves.iter().enumerate() {
        for i in 0..curve.len() - 1 {
            if (curve[i + 1] - curve[i]).norm() > 0.0 {
                segs.push(RawSeg { a: curve[i], b: curve[i + 1], curve: ci, index: i });
            }
        }
    }

    // Candidate pairs via a uniform grid at the largest segment length: two
    // intersecting segments always share at least one covered cell.
    let cell = segs
        .iter()
        .map(|s| (s.b - s.a).norm())
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let span = |lo: f64, hi: f64| {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        (lo / cell).floor() as i64..=(hi / cell).floor() as i64
    };
    let mut bins: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (sid, s) in segs.iter().enumerate() {
        for bx in span(s.a.x, s.b.x) {
            for by in span(s.a.y, s.b.y) {
                bins.entry((bx, by)).or_default().push(sid as u32);
            }
        }
    }
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); segs.len()];
    let mut tested: HashSet<(u32, u32)> = HashSet::new();
    for ids in bins.values() {
        for (pos, &i) in ids.iter().enumerate() {
            for &j in &ids[pos + 1..] {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                if !tested.insert((i, j)) {
                    continue;
                }
                let (si, sj) = (&segs[i as usize], &segs[j as usize]);
                // Consecutive segments of one curve share an endpoint by
                // construction; cutting there would only produce noise.
                if si.curve == sj.curve && si.index.abs_diff(sj.index) <= 1 {
                    continue;
                }
                if let Some((t, u)) = seg_intersect(si.a, si.b, sj.a, sj.b) {
                    cuts[i as usize].push(t);
                    cuts[j as usize].push(u);
                }
            }
        }
    }

    let mut registry = NodeRegistry::new(tol::REACH_NODE_MERGE);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (sid, seg) in segs.iter().enumerate() {
        let ts = &mut cuts[sid];
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut pts = Vec::with_capacity(ts.len() + 2);
        pts.push(seg.a);
        for &t in ts.iter() {
            pts.push(seg.a + t * (seg.b - seg.a));
        }
        pts.push(seg.b);
        let ids: Vec<usize> = pts.into_iter().map(|p| registry.insert(p)).collect();
        for pair in ids.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                edges.push((u, v));
            }
        }
    }
    (registry.coords, edges)
}

/// A face of the planar graph: its boundary cycle (node ids, implicitly
/// closed) and signed shoelace area.
struct Face {
    cycle: Vec<usize>,
    area: f64,
}

/// Enumerates all faces by half-edge traversal. Half-edge `2e` runs along
/// edge `e` forward, `2e + 1` backward; `next(h)` is the clockwise successor
/// of the twin of `h` around the head node, which keeps each face on the
/// left of its cycle.
fn enumerate_faces(nodes: &[Vec2], edges: &[(usize, usize)]) -> Vec<Face> {
    let nh = 2 * edges.len();
    let origin = |h: usize| if h % 2 == 0 { edges[h / 2].0 } else { edges[h / 2].1 };
    let head = |h: usize| if h % 2 == 0 { edges[h / 2].1 } else { edges[h / 2].0 };
    let mut angle = vec![0.0_f64; nh];
    for h in 0..nh {
        let d = nodes[head(h)] - nodes[origin(h)];
        angle[h] = d.y.atan2(d.x);
    }
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for h in 0..nh {
        outgoing[origin(h)].push(h);
    }
    let mut pos = vec![0usize; nh];
    for list in outgoing.iter_mut() {
        list.sort_by(|&a, &b| angle[a].partial_cmp(&angle[b]).unwrap());
        for (i, &h) in list.iter().enumerate() {
            pos[h] = i;
        }
    }
    let next = |h: usize| -> usize {
        let twin = h ^ 1;
        let fan = &outgoing[origin(twin)];
        fan[(pos[twin] + fan.len() - 1) % fan.len()]
    };
    let mut visited = vec![false; nh];
    let mut faces = Vec::new();
    for h0 in 0..nh {
        if visited[h0] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut h = h0;
        loop {
            visited[h] = true;
            cycle.push(origin(h));
            h = next(h);
            if h == h0 {
                break;
            }
        }
        let mut area = 0.0;
        for i in 0..cycle.len() {
            let p = nodes[cycle[i]];
            let q = nodes[cycle[(i + 1) % cycle.len()]];
            area += p.cross(q);
        }
        faces.push(Face { cycle, area: 0.5 * area });
    }
    faces
}

/// An interior point of a face, at least [`tol::REACH_REP_CLEARANCE`] away
/// from the face boundary: offset from the midpoint of the longest boundary
/// edge into the face (the face lies on the left of its cycle), halving the
/// offset until it lands inside. `None` for slivers thinner than the
/// clearance, which are never holes.
fn face_representative(cycle: &[usize], nodes: &[Vec2]) -> Option<Vec2> {
    let n = cycle.len();
    let poly: Vec<Vec2> = cycle.iter().map(|&i| nodes[i]).collect();
    let mut best = 0;
    let mut best_len = 0.0;
    for i in 0..n {
        let len = (poly[(i + 1) % n] - poly[i]).norm();
        if len > best_len {
            best_len = len;
            best = i;
        }
    }
    if best_len == 0.0 {
        return None;
    }
    let a = poly[best];
    let b = poly[(best + 1) % n];
    let tangent = (b - a) / best_len;
    let left = Vec2::new(-tangent.y, tangent.x);
    let mid = 0.5 * (a + b);
    let mut eps = 0.25 * best_len;
    for _ in 0..50 {
        let p = mid + eps * left;
        if point_in_polygon(p, &poly) && dist_to_closed_polyline(p, &poly) >= tol::REACH_REP_CLEARANCE
        {
            return Some(p);
        }
        eps *= 0.5;
    }
    None
}

/// Full boundary (outer loop plus holes) via the arrangement-face
/// construction described on [`reachable_boundary`].
fn arrangement_boundary(omega_bar0: f64, resolution: usize) -> Vec<BoundaryLoop> {
    let curves = sample_extremal_curves(omega_bar0, resolution);
    let (nodes, edges) = build_arrangement(&curves);
    let faces = enumerate_faces(&nodes, &edges);
    let outer = faces
        .iter()
        .enumerate()
        .min_by(|(_, f), (_, g)| f.area.partial_cmp(&g.area).unwrap())
        .map(|(i, _)| i)
        .expect("arrangement has at least one face");
    assert!(
        faces[outer].area < 0.0,
        "no unbounded face found in the boundary arrangement"
    );
    let loop_points = |face: &Face| -> Vec<Vec2> {
        // Reverse the cycle: the unbounded face is traced clockwise and
        // becomes the counter-clockwise outer loop; bounded (hole) faces are
        // counter-clockwise and become clockwise.
        face.cycle.iter().rev().map(|&i| nodes[i]).collect()
    };
    let mut loops = vec![BoundaryLoop { points: loop_points(&faces[outer]), is_hole: false }];
    let cloud = two_segment_cloud(omega_bar0);
    for (fi, face) in faces.iter().enumerate() {
        if fi == outer || face.area < tol::REACH_FACE_AREA_MIN {
            continue;
        }
        let Some(rep) = face_representative(&face.cycle, &nodes) else {
            continue;
        };
        if !point_is_reachable(omega_bar0, rep, &cloud) {
            loops.push(BoundaryLoop { points: loop_points(face), is_hole: true });
        }
    }
    loops
}

// ---------------------------------------------------------------------------
// Membership probe
// ---------------------------------------------------------------------------

/// Tip of a two-segment piecewise-constant control `z = [c₁, c₂, s̄]`:
/// curvature rate `ω̄₀ c₁` on `[0, s̄]`, then `ω̄₀ c₂` on `[s̄, 1]`. Defined
/// smoothly for parameters slightly outside the box, which finite
/// differencing at the box edge relies on.
fn two_segment_tip(omega_bar0: f64, z: &[f64; 3]) -> Vec2 {
    let (d1, theta) = arc_displacement(0.0, omega_bar0 * z[0], z[2]);
    let (d2, _) = arc_displacement(theta, omega_bar0 * z[1], 1.0 - z[2]);
    d1 + d2
}

/// Tip of a three-segment control `z = [c₁, c₂, c₃, s₁, s₂]` with the switch
/// locations sorted so the segment lengths stay non-negative inside the box.
fn three_segment_tip(omega_bar0: f64, z: &[f64; 5]) -> Vec2 {
    let (s1, s2) = if z[3] <= z[4] { (z[3], z[4]) } else { (z[4], z[3]) };
    let (d1, t1) = arc_displacement(0.0, omega_bar0 * z[0], s1);
    let (d2, t2) = arc_displacement(t1, omega_bar0 * z[1], s2 - s1);
    let (d3, _) = arc_displacement(t2, omega_bar0 * z[2], 1.0 - s2);
    d1 + d2 + d3
}

/// Deterministic grid of two-segment controls and their tips, used as warm
/// starts for the membership solves. Parallel but order-preserving.
fn two_segment_cloud(omega_bar0: f64) -> Vec<([f64; 3], Vec2)> {
    const G: usize = 33;
    (0..G * G * G)
        .into_par_iter()
        .map(|idx| {
            let lin = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (G - 1) as f64;
            let z = [
                lin(idx / (G * G), -1.0, 1.0),
                lin((idx / G) % G, -1.0, 1.0),
                lin(idx % G, 0.0, 1.0),
            ];
            (z, two_segment_tip(omega_bar0, &z))
        })
        .collect()
}

/// Solves the small symmetric system `A x = b` by Gaussian elimination with
/// partial pivoting; `None` when numerically singular.
fn solve_small<const D: usize>(mut a: [[f64; D]; D], mut b: [f64; D]) -> Option<[f64; D]> {
    for col in 0..D {
        let pivot = (col..D)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..D {
            let f = a[row][col] / a[col][col];
            for k in col..D {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; D];
    for col in (0..D).rev() {
        let mut s = b[col];
        for k in col + 1..D {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Damped Gauss-Newton (Levenberg-style) polish of a tip-inversion start.
///
/// Minimizes `|tip(z) - target|` over the box `[lo, hi]` with a central
/// finite-difference Jacobian, increasing the damping tenfold on a rejected
/// step and relaxing it by 0.3 on acceptance. Returns the final distance and
/// parameters.
fn gn_polish<const D: usize>(
    target: Vec2,
    start: [f64; D],
    lo: &[f64; D],
    hi: &[f64; D],
    tip: impl Fn(&[f64; D]) -> Vec2,
) -> (f64, [f64; D]) {
    let clamp = |z: &mut [f64; D]| {
        for i in 0..D {
            z[i] = z[i].clamp(lo[i], hi[i]);
        }
    };
    let mut z = start;
    clamp(&mut z);
    let dist = |z: &[f64; D]| (tip(z) - target).norm();
    let mut f = dist(&z);
    let mut lambda = 1e-3;
    const H: f64 = 1e-7;
    for _ in 0..60 {
        if f < 1e-12 {
            break;
        }
        let r = tip(&z) - target;
        let mut jx = [0.0; D];
        let mut jy = [0.0; D];
        for i in 0..D {
            let mut zp = z;
            zp[i] += H;
            let mut zm = z;
            zm[i] -= H;
            let (tp, tm) = (tip(&zp), tip(&zm));
            jx[i] = (tp.x - tm.x) / (2.0 * H);
            jy[i] = (tp.y - tm.y) / (2.0 * H);
        }
        let mut normal = [[0.0; D]; D];
        let mut rhs = [0.0; D];
        for i in 0..D {
            for j in 0..D {
                normal[i][j] = jx[i] * jx[j] + jy[i] * jy[j];
            }
            rhs[i] = -(jx[i] * r.x + jy[i] * r.y);
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut damped = normal;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda;
            }
            let Some(dz) = solve_small(damped, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut zn = z;
            for i in 0..D {
                zn[i] += dz[i];
            }
            clamp(&mut zn);
            let fn_ = dist(&zn);
            if fn_ < f {
                z = zn;
                f = fn_;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (f, z)
}

/// 64-bit xorshift step mapped to `[0, 1)`; a fixed-seed generator for the
/// deterministic three-segment fallback starts.
fn next_unit(state: &mut u64) -> f64 {
    let mut x = *state;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    *state = x;
    (x >> 11) as f64 / (1u64 << 53) as f64
}

/// Whether `p` is the tip of some admissible control: multistart polish of
/// the two-segment inverse problem from the nearest cloud tips, with a
/// three-segment fallback when every two-segment start stalls. Reachable
/// points polish below [`tol::REACH_MEMBERSHIP_TOL`] by a wide margin;
/// points inside an unreachable inclusion cannot get closer than the
/// inclusion's boundary.
fn point_is_reachable(omega_bar0: f64, p: Vec2, cloud: &[([f64; 3], Vec2)]) -> bool {
    const STARTS: usize = 12;
    let mut best: Vec<(f64, [f64; 3])> = Vec::with_capacity(STARTS + 1);
    for (z, tip) in cloud {
        let d = (*tip - p).norm_squared();
        let at = best.partition_point(|(bd, _)| *bd < d);
        if at < STARTS {
            best.insert(at, (d, *z));
            best.truncate(STARTS);
        }
    }
    let lo3 = [-1.0, -1.0, 0.0];
    let hi3 = [1.0, 1.0, 1.0];
    let mut best_f = f64::INFINITY;
    let mut best_z = best[0].1;
    for (_, z0) in &best {
        let (f, z) = gn_polish(p, *z0, &lo3, &hi3, |z| two_segment_tip(omega_bar0, z));
        if f < best_f {
            best_f = f;
            best_z = z;
        }
        if best_f < tol::REACH_MEMBERSHIP_TOL {
            return true;
        }
    }
    let lo5 = [-1.0, -1.0, -1.0, 0.0, 0.0];
    let hi5 = [1.0, 1.0, 1.0, 1.0, 1.0];
    let mut state = 0x9E37_79B9_7F4A_7C15_u64;
    for trial in 0..40 {
        let z0 = if trial % 2 == 0 {
            let a = next_unit(&mut state);
            let b = next_unit(&mut state);
            [
                2.0 * next_unit(&mut state) - 1.0,
                2.0 * next_unit(&mut state) - 1.0,
                2.0 * next_unit(&mut state) - 1.0,
                a.min(b),
                a.max(b),
            ]
        } else {
            // Split the best two-segment solution's first piece.
            [
                best_z[0],
                2.0 * next_unit(&mut state) - 1.0,
                best_z[1],
                next_unit(&mut state) * best_z[2],
                best_z[2],
            ]
        };
        let (f, _) = gn_polish(p, z0, &lo5, &hi5, |z| three_segment_tip(omega_bar0, z));
        if f < best_f {
            best_f = f;
        }
        if best_f < tol::REACH_MEMBERSHIP_TOL {
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Point-polygon helpers
// ---------------------------------------------------------------------------

/// Even-odd ray-crossing test against an implicitly closed polygon.
fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y) {
            inside = !inside;
        }
    }
    inside
}

/// Distance from `p` to segment `a..b`.
fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    (p - (a + t * d)).norm()
}

/// Distance from `p` to an implicitly closed polyline.
fn dist_to_closed_polyline(p: Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| dist_point_segment(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}
