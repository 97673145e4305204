//! Finite-difference stencils on ghost-padded nodal fields.
//!
//! All derivatives in the rod model reduce to three stencils on the uniform
//! grid:
//!
//! ```text
//! D₋f_k  = (f_k − f_{k−1}) / Δs              backward difference
//! D₊f_k  = (f_{k+1} − f_k) / Δs              forward difference
//! D²_cf_k = (f_{k+1} − 2 f_k + f_{k−1}) / Δs²   central second difference
//! ```
//!
//! They compose: `D₊(D₋f)_k = D²_cf_k` up to rounding, which the property
//! tests pin down. The stencils are generic over the value type so the same
//! code differentiates tensions (`f64`) and positions ([`Vec2`]).

use crate::grid::NodeField;
use crate::vec2::Vec2;

/// Value types that support the linear operations a difference stencil needs.
pub trait StencilValue:
    Copy
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + std::ops::Div<f64, Output = Self>
{
}

impl StencilValue for f64 {}
impl StencilValue for Vec2 {}

/// Backward difference `D₋f_k`. Requires slot `k−1` to be populated.
#[inline]
pub fn d_minus<T: StencilValue>(f: &NodeField<T>, k: isize, ds: f64) -> T {
    (f[k] - f[k - 1]) / ds
}

/// Forward difference `D₊f_k`. Requires slot `k+1` to be populated.
#[inline]
pub fn d_plus<T: StencilValue>(f: &NodeField<T>, k: isize, ds: f64) -> T {
    (f[k + 1] - f[k]) / ds
}

/// Central second difference `D²_cf_k`. Requires slots `k±1`.
#[inline]
pub fn d2_central<T: StencilValue>(f: &NodeField<T>, k: isize, ds: f64) -> T {
    (f[k + 1] - f[k] * 2.0 + f[k - 1]) / (ds * ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn exact_on_affine_data() {
        // f(s) = 3s − 2 with Δs = 0.5: both first differences give exactly 3,
        // the second difference exactly 0 (dyadic arithmetic, no rounding).
        let ds = 0.5;
        let f = NodeField::from_fn(4, |k| 3.0 * (k as f64 * ds) - 2.0);
        for k in 0..=3 {
            assert_eq!(d_minus(&f, k + 1, ds), 3.0);
            assert_eq!(d_plus(&f, k, ds), 3.0);
        }
        for k in 0..=3 {
            assert_eq!(d2_central(&f, k, ds), 0.0);
        }
    }

    #[test]
    fn second_difference_of_quadratic() {
        // f(s) = s²: D²_c is exact (value 2) for quadratics at any spacing.
        let ds = 0.25;
        let f = NodeField::from_fn(8, |k| {
            let s = k as f64 * ds;
            s * s
        });
        for k in 0..=7 {
            assert_abs_diff_eq!(d2_central(&f, k, ds), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn composition_identity() {
        // D₊(D₋f) = D²_cf up to rounding on irregular data.
        let n = 12;
        let ds = 1.0 / n as f64;
        let f = NodeField::from_fn(n, |k| {
            let s = k as f64 * ds;
            (3.1 * s).sin() * (1.0 + s * s)
        });
        let df = NodeField::from_fn(n, |k| {
            if k == -1 {
                0.0
            } else {
                d_minus(&f, k, ds)
            }
        });
        for k in 0..n as isize {
            assert_relative_eq!(
                d_plus(&df, k, ds),
                d2_central(&f, k, ds),
                epsilon = 1e-9,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn convergence_order_on_smooth_field() {
        // Truncation error: D₋ is first order, D²_c second order on sin.
        let err = |n: usize| {
            let ds = 1.0 / n as f64;
            let f = NodeField::from_fn(n, |k| (k as f64 * ds).sin());
            let mut e1: f64 = 0.0;
            let mut e2: f64 = 0.0;
            for k in 0..=n as isize {
                let s = k as f64 * ds;
                e1 = e1.max((d_minus(&f, k, ds) - s.cos()).abs());
                e2 = e2.max((d2_central(&f, k, ds) + s.sin()).abs());
            }
            (e1, e2)
        };
        let (c1, c2) = err(32);
        let (f1, f2) = err(64);
        let r1 = c1 / f1;
        let r2 = c2 / f2;
        assert!((1.7..2.3).contains(&r1), "first-difference ratio {r1}");
        assert!((3.4..4.6).contains(&r2), "second-difference ratio {r2}");
    }

    #[test]
    fn vector_valued_stencils() {
        use crate::vec2::Vec2;
        let ds = 0.5;
        let f = NodeField::from_fn(4, |k| {
            let s = k as f64 * ds;
            Vec2::new(2.0 * s, -s)
        });
        assert_eq!(d_minus(&f, 1, ds), Vec2::new(2.0, -1.0));
        assert_eq!(d2_central(&f, 1, ds), Vec2::ZERO);
    }
}
