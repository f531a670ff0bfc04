//! Double-double (FP64x2) arithmetic.
//!
//! A [`DD`] holds an unevaluated sum `hi + lo` of two non-overlapping binary64
//! values, giving roughly 106 bits of significand. All routines assume the
//! default IEEE 754 round-to-nearest-even mode; values are never NaN or
//! infinite once they have passed a checked constructor.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::fp::ldexp;

/// Error-free addition: `s = fl(a + b)` and `s + e = a + b` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free addition for `|a| >= |b|` (or `a == 0`).
#[inline]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product: `p = fl(a * b)` and `p + e = a * b` exactly.
///
/// Relies on [`f64::mul_add`] being a correctly rounded fused multiply-add.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// A double-double number `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DD {
    hi: f64,
    lo: f64,
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    /// Renormalizes `hi + lo` into a double-double; rejects NaN and infinities.
    pub fn from_parts(hi: f64, lo: f64) -> Result<DD> {
        if !hi.is_finite() {
            return Err(Error::NonFinite(hi));
        }
        if !lo.is_finite() {
            return Err(Error::NonFinite(lo));
        }
        let (s, e) = two_sum(hi, lo);
        if !s.is_finite() {
            return Err(Error::NonFinite(s));
        }
        Ok(DD::normalized(s, e))
    }

    /// A double-double with zero low limb.
    pub fn from_f64(x: f64) -> Result<DD> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        Ok(DD { hi: x, lo: 0.0 })
    }

    /// Builds a value from limbs the caller guarantees to be finite and
    /// non-overlapping.
    #[inline]
    pub(crate) const fn from_raw(hi: f64, lo: f64) -> DD {
        DD { hi, lo }
    }

    #[inline]
    fn normalized(hi: f64, lo: f64) -> DD {
        if hi == 0.0 {
            DD { hi, lo: 0.0 }
        } else {
            DD { hi, lo }
        }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn abs(self) -> DD {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Multiplies both limbs by `2^p`; fails unless the result is bit-exact.
    pub fn scale_pow2(self, p: i64) -> Result<DD> {
        let hi = ldexp(self.hi, p);
        let lo = ldexp(self.lo, p);
        let exact = hi.is_finite()
            && lo.is_finite()
            && ldexp(hi, -p) == self.hi
            && ldexp(lo, -p) == self.lo;
        if exact {
            Ok(DD::normalized(hi, lo))
        } else {
            Err(Error::ScaleOutOfRange { exponent: p })
        }
    }

    /// `2^p` scaling that only fails on overflow; a low limb that drops into
    /// the subnormal range is rounded.
    pub(crate) fn scale_pow2_lossy(self, p: i64) -> Result<DD> {
        let hi = ldexp(self.hi, p);
        let lo = ldexp(self.lo, p);
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::ScaleOutOfRange { exponent: p });
        }
        let (s, e) = fast_two_sum(hi, lo);
        Ok(DD::normalized(s, e))
    }

    /// Nearest binary64 (`hi`, since the pair is normalized).
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi
    }

    /// Checks the non-overlap invariant.
    pub fn is_normalized(self) -> bool {
        if !self.hi.is_finite() || !self.lo.is_finite() {
            return false;
        }
        if self.hi == 0.0 {
            return self.lo == 0.0;
        }
        self.hi + self.lo == self.hi && self.lo.abs() <= crate::fp::ulp(self.hi) / 2.0
    }
}

/// Renormalized double-double sum (two `two_sum`s, accurate variant).
#[inline]
pub fn dd_add(a: DD, b: DD) -> DD {
    let (sh, sl) = two_sum(a.hi, b.hi);
    let (th, tl) = two_sum(a.lo, b.lo);
    let sl = sl + th;
    let (sh, sl) = fast_two_sum(sh, sl);
    let sl = sl + tl;
    let (hi, lo) = fast_two_sum(sh, sl);
    DD::normalized(hi, lo)
}

/// Double-double plus binary64.
#[inline]
pub fn dd_add_f64(a: DD, b: f64) -> DD {
    let (sh, sl) = two_sum(a.hi, b);
    let sl = sl + a.lo;
    let (hi, lo) = fast_two_sum(sh, sl);
    DD::normalized(hi, lo)
}

/// Renormalized double-double product (one `two_prod`, two FMAs).
#[inline]
pub fn dd_mul(a: DD, b: DD) -> DD {
    let (ch, cl1) = two_prod(a.hi, b.hi);
    let tl0 = a.lo * b.lo;
    let tl1 = a.hi.mul_add(b.lo, tl0);
    let cl2 = a.lo.mul_add(b.hi, tl1);
    let cl3 = cl1 + cl2;
    let (hi, lo) = fast_two_sum(ch, cl3);
    DD::normalized(hi, lo)
}

/// Double-double renormalization of `hi + lo` (checked).
pub fn dd_from_parts(hi: f64, lo: f64) -> Result<DD> {
    DD::from_parts(hi, lo)
}

/// Exact power-of-two scaling of both limbs.
pub fn dd_scale_pow2(a: DD, p: i64) -> Result<DD> {
    a.scale_pow2(p)
}

impl Add for DD {
    type Output = DD;
    #[inline]
    fn add(self, rhs: DD) -> DD {
        dd_add(self, rhs)
    }
}

impl AddAssign for DD {
    #[inline]
    fn add_assign(&mut self, rhs: DD) {
        *self = dd_add(*self, rhs);
    }
}

impl Sub for DD {
    type Output = DD;
    #[inline]
    fn sub(self, rhs: DD) -> DD {
        dd_add(self, -rhs)
    }
}

impl Mul for DD {
    type Output = DD;
    #[inline]
    fn mul(self, rhs: DD) -> DD {
        dd_mul(self, rhs)
    }
}

impl Neg for DD {
    type Output = DD;
    #[inline]
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, other: &DD) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Debug for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DD({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}", self.hi, self.lo)
    }
}
