//! Dot-product condition number and forward error bounds.

use crate::cascade::SplitWidths;
use crate::dd::{dd_add, dd_mul, DD};
use crate::fp::pow2;

/// Magnitudes that enter the bounds for one dot product of length `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBoundInputs {
    pub k: usize,
    pub norm_inf_x: f64,
    pub norm_inf_y: f64,
    /// `|x|^T |y|`, accumulated in double-double and rounded up.
    pub abs_dot: f64,
}

fn norm_inf(v: &[DD]) -> f64 {
    // |hi + lo| <= |hi| (1 + 2^-53); round the bound up by one ulp.
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.hi().abs()));
    next_up(m)
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

impl ErrorBoundInputs {
    pub fn new(x: &[DD], y: &[DD]) -> Self {
        assert_eq!(x.len(), y.len());
        let s = x
            .iter()
            .zip(y)
            .fold(DD::ZERO, |s, (a, b)| dd_add(s, dd_mul(a.abs(), b.abs())));
        // relative error of the double-double sum is far below 2^-52
        let abs_dot = next_up(next_up(s.hi() + s.lo()));
        ErrorBoundInputs { k: x.len(), norm_inf_x: norm_inf(x), norm_inf_y: norm_inf(y), abs_dot }
    }
}

/// `|x|^T|y| 2^-106 + 40 k^2 2^-(D2+53) ||x||inf ||y||inf`.
pub fn cascaded_error_bound(inp: &ErrorBoundInputs, w: &SplitWidths) -> f64 {
    let k = inp.k as f64;
    inp.abs_dot * pow2(-106) + 40.0 * k * k * w.eps() * inp.norm_inf_x * inp.norm_inf_y
}

/// `k 2^-106 |x|^T|y|`.
pub fn fp64x2_error_bound(inp: &ErrorBoundInputs) -> f64 {
    inp.k as f64 * pow2(-106) * inp.abs_dot
}

/// `||x||2 ||y||2 / |x^T y|` with sums in double-double; infinite when the
/// dot product is zero.
pub fn dot_condition(x: &[DD], y: &[DD]) -> f64 {
    assert_eq!(x.len(), y.len());
    let sq = |v: &[DD]| v.iter().fold(DD::ZERO, |s, a| dd_add(s, dd_mul(*a, *a)));
    let dot = x.iter().zip(y).fold(DD::ZERO, |s, (a, b)| dd_add(s, dd_mul(*a, *b)));
    if dot.is_zero() {
        return f64::INFINITY;
    }
    let (nx, ny) = (sq(x), sq(y));
    nx.hi().sqrt() * ny.hi().sqrt() / dot.hi().abs()
}
