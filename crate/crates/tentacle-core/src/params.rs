//! Validated material data sampled on the grid.
//!
//! Seven material laws describe the rod:
//!
//! ```text
//! ρ  mass density            > 0
//! ε  base bending stiffness  > 0   (ε₀ = min_k ε_k enters the tip condition)
//! ν  constraint stiffening   ≥ 0
//! ω  curvature bound         > 0
//! μ  control authority       ≥ 0, μ(1) = 0 with vanishing slope at the tip
//! β  velocity friction       ≥ 0
//! γ  flexural friction       ≥ 0
//! ```
//!
//! The effective curvature bound under constant control is
//!
//! ```text
//! ω̄ = μ ω / (μ + ε)
//! ```
//!
//! which satisfies `0 ≤ ω̄ < ω` and vanishes at the free end. [`build_params`]
//! samples every law at the nodes `s_k = k/N`, enforces the sign conditions
//! with errors naming the law, node and value, and quantifies the tip decay
//! of `μ`: the hinge condition used by the optimizers requires `μ(1) = 0` and
//! `μ'(1) = 0`, so `|μ_N| ≤ 10 Δs²` and `|μ_N − μ_{N−1}| ≤ 10 Δs·Δs` are
//! demanded (warnings up to ten times those bounds, errors beyond).

use crate::error::{Error, Result};
use crate::expr::{eval_param, ParamExpr};
use crate::grid::{Grid, NodeField};
use crate::tol;

/// The seven material-law expressions.
#[derive(Debug, Clone)]
pub struct ParamExprs {
    /// Mass density `ρ(s)`.
    pub rho: ParamExpr,
    /// Base bending stiffness `ε(s)`.
    pub eps: ParamExpr,
    /// Constraint stiffening modulus `ν(s)`.
    pub nu: ParamExpr,
    /// Curvature bound `ω(s)`.
    pub omega: ParamExpr,
    /// Control authority `μ(s)`.
    pub mu: ParamExpr,
    /// Velocity friction coefficient `β(s)`.
    pub beta: ParamExpr,
    /// Flexural friction coefficient `γ(s)`.
    pub gamma: ParamExpr,
}

impl ParamExprs {
    /// Parses all seven laws from source strings, in the order
    /// `(ρ, ε, ν, ω, μ, β, γ)`.
    pub fn parse(
        rho: &str,
        eps: &str,
        nu: &str,
        omega: &str,
        mu: &str,
        beta: &str,
        gamma: &str,
    ) -> Result<Self> {
        Ok(ParamExprs {
            rho: ParamExpr::parse(rho)?,
            eps: ParamExpr::parse(eps)?,
            nu: ParamExpr::parse(nu)?,
            omega: ParamExpr::parse(omega)?,
            mu: ParamExpr::parse(mu)?,
            beta: ParamExpr::parse(beta)?,
            gamma: ParamExpr::parse(gamma)?,
        })
    }
}

/// Material data sampled at the physical nodes (ghost slots hold zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    n: usize,
    /// Mass density `ρ_k > 0`.
    pub rho: NodeField<f64>,
    /// Base bending stiffness `ε_k > 0`.
    pub eps: NodeField<f64>,
    /// Constraint stiffening `ν_k ≥ 0`.
    pub nu: NodeField<f64>,
    /// Curvature bound `ω_k > 0`.
    pub omega: NodeField<f64>,
    /// Control authority `μ_k ≥ 0`.
    pub mu: NodeField<f64>,
    /// Velocity friction `β_k ≥ 0`.
    pub beta: NodeField<f64>,
    /// Flexural friction `γ_k ≥ 0`.
    pub gamma: NodeField<f64>,
    /// Effective curvature bound `ω̄_k = μ_k ω_k / (μ_k + ε_k)`.
    pub omega_bar: NodeField<f64>,
    /// Smallest base stiffness `ε₀ = min_k ε_k`.
    pub eps0: f64,
    /// True when `ω̄` is constant over `k = 0..N−1` to within 1e−12 (the tip
    /// node is excluded because `μ_N = 0` forces `ω̄_N = 0`).
    pub constant_omega_bar: bool,
    /// Non-fatal irregularities found during validation.
    pub warnings: Vec<String>,
}

impl ParamSet {
    /// Number of spatial cells `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// The common effective curvature bound when [`constant_omega_bar`] holds.
    ///
    /// [`constant_omega_bar`]: ParamSet::constant_omega_bar
    pub fn omega_bar0(&self) -> Option<f64> {
        self.constant_omega_bar.then(|| self.omega_bar[0])
    }
}

fn sample(expr: &ParamExpr, grid: &Grid) -> Result<NodeField<f64>> {
    let n = grid.n();
    let mut field = NodeField::zeros(n);
    for k in 0..=n {
        field[k as isize] = eval_param(expr, grid.s(k))?;
    }
    Ok(field)
}

fn require(
    field: &NodeField<f64>,
    n: usize,
    name: &str,
    strict: bool,
    message: &str,
) -> Result<()> {
    for k in 0..=n as isize {
        let v = field[k];
        let ok = if strict { v > 0.0 } else { v >= 0.0 };
        if !ok || !v.is_finite() {
            return Err(Error::InvalidParams(format!(
                "{name} violates {message}: {name}[{k}] = {v}"
            )));
        }
    }
    Ok(())
}

/// Samples and validates all material laws on `grid`.
pub fn build_params(exprs: &ParamExprs, grid: &Grid) -> Result<ParamSet> {
    let n = grid.n();
    let ds = grid.ds();

    let rho = sample(&exprs.rho, grid)?;
    let eps = sample(&exprs.eps, grid)?;
    let nu = sample(&exprs.nu, grid)?;
    let omega = sample(&exprs.omega, grid)?;
    let mu = sample(&exprs.mu, grid)?;
    let beta = sample(&exprs.beta, grid)?;
    let gamma = sample(&exprs.gamma, grid)?;

    require(&rho, n, "rho", true, "ρ > 0")?;
    require(&eps, n, "eps", true, "ε ≥ ε₀ > 0")?;
    require(&nu, n, "nu", false, "ν ≥ 0")?;
    require(&omega, n, "omega", true, "ω > 0")?;
    require(&mu, n, "mu", false, "μ ≥ 0")?;
    require(&beta, n, "beta", false, "β ≥ 0")?;
    require(&gamma, n, "gamma", false, "γ ≥ 0")?;

    let mut warnings = Vec::new();

    // Tip decay of the control authority: μ(1) = 0 with μ'(1) = 0. On the
    // grid: |μ_N| = O(Δs²) and |μ_N − μ_{N−1}| = O(Δs²) (one-sided slope
    // times Δs). Warn above ten times the leading constant, reject above a
    // hundred times.
    let tip_value_bound = 10.0 * ds * ds;
    let tip_slope_bound = 10.0 * ds * ds;
    let mu_n = mu[n as isize];
    let mu_slope = (mu_n - mu[n as isize - 1]).abs();
    if mu_n > 10.0 * tip_value_bound {
        return Err(Error::InvalidParams(format!(
            "mu violates the free-tip condition μ(1) = 0: mu[{n}] = {mu_n} (bound {tip_value_bound:.3e})"
        )));
    }
    if mu_n > tip_value_bound {
        warnings.push(format!(
            "mu[{n}] = {mu_n} barely satisfies the free-tip condition μ(1) = 0 (bound {tip_value_bound:.3e})"
        ));
    }
    if mu_slope > 10.0 * tip_slope_bound {
        return Err(Error::InvalidParams(format!(
            "mu violates the flat-tip condition μ'(1) = 0: |mu[{n}] - mu[{}]| = {mu_slope} (bound {tip_slope_bound:.3e})",
            n - 1
        )));
    }
    if mu_slope > tip_slope_bound {
        warnings.push(format!(
            "mu slope at the tip {mu_slope:.3e} barely satisfies μ'(1) = 0 (bound {tip_slope_bound:.3e})"
        ));
    }

    // Effective curvature bound. ε > 0 keeps the quotient finite; when μ/(μ+ε)
    // rounds up to 1 the strict bound ω̄ < ω is restored by a one-ulp nudge.
    let mut omega_bar = NodeField::zeros(n);
    for k in 0..=n as isize {
        let mut wb = omega[k] * mu[k] / (mu[k] + eps[k]);
        if wb >= omega[k] {
            wb = omega[k] * (1.0 - f64::EPSILON);
        }
        omega_bar[k] = wb;
    }

    let wb0 = omega_bar[0];
    let spread = (0..n as isize)
        .map(|k| (omega_bar[k] - wb0).abs())
        .fold(0.0f64, f64::max);
    let constant_omega_bar = spread <= tol::OMEGA_BAR_CONST_TOL;

    let eps0 = (0..=n as isize).map(|k| eps[k]).fold(f64::INFINITY, f64::min);

    Ok(ParamSet {
        n,
        rho,
        eps,
        nu,
        omega,
        mu,
        beta,
        gamma,
        omega_bar,
        eps0,
        constant_omega_bar,
        warnings,
    })
}

/// The benchmark material data used throughout: a tapering, lighter-and-softer
/// towards-the-tip rod with friction. Friction laws are passed in because the
/// scenarios vary them.
pub fn benchmark_exprs(beta: &str, gamma: &str) -> Result<ParamExprs> {
    ParamExprs::parse(
        "exp(-s)",
        "1e-3*(1 - 0.9*s)",
        "1e-3*(1 - 0.09*s)",
        "2*pi*(1 + s^2)",
        "(1 - s)*exp(-0.1*s^2/(1 - s^2))",
        beta,
        gamma,
    )
}

/// Benchmark material data with the standard strong friction (`β = 4 − s`,
/// `γ = 1e−6 (4 − s)`) sampled on `grid`.
pub fn build_params_benchmark(grid: &Grid) -> Result<ParamSet> {
    build_params(&benchmark_exprs("4 - s", "1e-6*(4 - s)")?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn benchmark(n: usize) -> ParamSet {
        let grid = Grid::space_only(n).unwrap();
        let exprs = benchmark_exprs("4 - s", "1e-6*(4 - s)").unwrap();
        build_params(&exprs, &grid).unwrap()
    }

    #[test]
    fn benchmark_laws_sample_correctly() {
        let p = benchmark(50);
        assert_eq!(p.rho[0], 1.0);
        assert_relative_eq!(p.rho[50], (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(p.eps[50], 1e-4, epsilon = 1e-17);
        assert_relative_eq!(p.omega[0], 2.0 * std::f64::consts::PI, epsilon = 1e-15);
        assert_relative_eq!(p.omega[50], 4.0 * std::f64::consts::PI, epsilon = 1e-15);
        // The tip singularity of μ resolves to exactly zero just inside s = 1.
        assert_eq!(p.mu[50], 0.0);
        assert_eq!(p.omega_bar[50], 0.0);
        assert_eq!(p.beta[0], 4.0);
        assert_eq!(p.beta[50], 3.0);
        assert_relative_eq!(p.eps0, 1e-4, epsilon = 1e-17);
        assert!(!p.constant_omega_bar);
        assert!(p.warnings.is_empty(), "warnings: {:?}", p.warnings);
    }

    #[test]
    fn omega_bar_strictly_below_omega() {
        let p = benchmark(50);
        for k in 0..=50isize {
            assert!(p.omega_bar[k] >= 0.0);
            assert!(
                p.omega_bar[k] < p.omega[k],
                "ω̄[{k}] = {} not below ω[{k}] = {}",
                p.omega_bar[k],
                p.omega[k]
            );
        }
    }

    #[test]
    fn rejects_sign_violations() {
        let grid = Grid::space_only(10).unwrap();

        let zero_eps = ParamExprs::parse("1", "0", "0", "1", "(1 - s)^2", "0", "0").unwrap();
        let err = build_params(&zero_eps, &grid).unwrap_err();
        assert!(err.to_string().contains("eps violates ε ≥ ε₀"), "{err}");

        let neg_rho = ParamExprs::parse("s - 0.5", "1e-3", "0", "1", "(1 - s)^2", "0", "0").unwrap();
        let err = build_params(&neg_rho, &grid).unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");

        let neg_beta =
            ParamExprs::parse("1", "1e-3", "0", "1", "(1 - s)^2", "-1", "0").unwrap();
        assert!(build_params(&neg_beta, &grid).is_err());
    }

    #[test]
    fn rejects_nonvanishing_mu_tip() {
        // μ ≡ 1 has no tip decay at all (1 ≫ 100 Δs² at N = 40).
        let grid = Grid::space_only(40).unwrap();
        let flat_mu = ParamExprs::parse("1", "1e-3", "0", "1", "1", "0", "0").unwrap();
        let err = build_params(&flat_mu, &grid).unwrap_err();
        assert!(err.to_string().contains("free-tip"), "{err}");

        // μ = 1 − s vanishes but with order-one slope: the one-sided
        // difference is Δs, which at N = 200 exceeds 100 Δs².
        let grid = Grid::space_only(200).unwrap();
        let sloped_mu = ParamExprs::parse("1", "1e-3", "0", "1", "1 - s", "0", "0").unwrap();
        let err = build_params(&sloped_mu, &grid).unwrap_err();
        assert!(err.to_string().contains("flat-tip"), "{err}");

        // μ = (1 − s)² satisfies both conditions at any resolution.
        for n in [10, 40, 200] {
            let grid = Grid::space_only(n).unwrap();
            let quad_mu =
                ParamExprs::parse("1", "1e-3", "0", "1", "(1 - s)^2", "0", "0").unwrap();
            let p = build_params(&quad_mu, &grid).unwrap();
            assert!(p.warnings.is_empty(), "warnings at N = {n}: {:?}", p.warnings);
        }
    }

    #[test]
    fn constant_omega_bar_detection() {
        let grid = Grid::space_only(8).unwrap();
        // Rig ω = ω̄₀ (μ + ε)/μ so that ω̄ ≡ 1 away from the tip.
        let rigged = ParamExprs::parse(
            "1",
            "1e-3",
            "0",
            "((1 - s)^2 + 1e-3)/(1 - s)^2",
            "(1 - s)^2",
            "0",
            "0",
        )
        .unwrap();
        let p = build_params(&rigged, &grid).unwrap();
        assert!(p.constant_omega_bar);
        assert_relative_eq!(p.omega_bar0().unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(p.omega_bar[8], 0.0);

        let varying = benchmark(8);
        assert_eq!(varying.omega_bar0(), None);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = benchmark(25);
        let b = benchmark(25);
        for k in -1..=26isize {
            assert_eq!(a.rho[k].to_bits(), b.rho[k].to_bits());
            assert_eq!(a.omega_bar[k].to_bits(), b.omega_bar[k].to_bits());
            assert_eq!(a.mu[k].to_bits(), b.mu[k].to_bits());
        }
        assert_eq!(a.eps0.to_bits(), b.eps0.to_bits());
    }
}
