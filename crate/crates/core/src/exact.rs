//! Exact dyadic-rational arithmetic and the reference GEMM.
//!
//! Every finite binary64 (and so every [`DD`]) is a dyadic rational, so the
//! true product of two double-double matrices is computable exactly. This
//! module is the ground truth for all accuracy measurements in the crate. It
//! deliberately shares no floating-point tricks with the code it checks:
//! products are formed from integer significands.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dd::DD;
use crate::error::{Error, Result};
use crate::fp::{decompose, ldexp};
use crate::matrix::MatrixDD;

/// An exact value `sign * mantissa * 2^exponent`, kept canonical
/// (odd mantissa, or zero with exponent 0).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Dyadic {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Dyadic {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    /// `mant * 2^exp`, canonicalized.
    pub fn new(mant: BigInt, exp: i64) -> Dyadic {
        if mant.is_zero() {
            return Dyadic::zero();
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        Dyadic { mant: mant >> tz, exp: exp + tz as i64 }
    }

    pub fn from_i64(m: i64, exp: i64) -> Dyadic {
        Dyadic::new(BigInt::from(m), exp)
    }

    /// Lossless conversion of a finite binary64.
    pub fn from_f64(x: f64) -> Dyadic {
        assert!(x.is_finite(), "Dyadic::from_f64 on non-finite {x}");
        let (m, e) = decompose(x);
        Dyadic::from_i64(m, e as i64)
    }

    /// Lossless conversion of `hi + lo`.
    pub fn from_dd(x: DD) -> Dyadic {
        Dyadic::from_f64(x.hi()) + Dyadic::from_f64(x.lo())
    }

    pub fn pow2(e: i64) -> Dyadic {
        Dyadic { mant: BigInt::one(), exp: e }
    }

    /// `-1`, `0` or `+1`.
    pub fn sign(&self) -> i8 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn mantissa(&self) -> BigUint {
        self.mant.magnitude().clone()
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { mant: self.mant.abs(), exp: self.exp }
    }

    /// Multiplication by `2^p` (exact).
    pub fn shl(&self, p: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + p }
    }

    /// `floor(log2 |x|)` for non-zero values.
    pub fn ilog2(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64 - 1)
        }
    }

    /// Nearest binary64, ties to even. Overflow gives a signed infinity.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let negative = self.mant.is_negative();
        let m = self.mant.magnitude();
        let nbits = m.bits() as i64;
        let top = self.exp + nbits - 1;
        let signed = |v: f64| if negative { -v } else { v };
        if top > 1023 {
            return signed(f64::INFINITY);
        }
        let mut q = (top - 52).max(-1074);
        let mut quotient: u64 = if q <= self.exp {
            (m << (self.exp - q) as usize).to_u64().expect("fits in 53 bits")
        } else {
            let shift = (q - self.exp) as usize;
            if shift as i64 > nbits + 1 {
                0
            } else {
                let quot = m >> shift;
                let rem = m - (&quot << shift);
                let half = BigUint::one() << (shift - 1);
                let mut quot = quot.to_u64().expect("fits in 53 bits");
                match rem.cmp(&half) {
                    Ordering::Greater => quot += 1,
                    Ordering::Equal if quot & 1 == 1 => quot += 1,
                    _ => {}
                }
                quot
            }
        };
        if quotient == 1u64 << 53 {
            quotient >>= 1;
            q += 1;
        }
        if quotient == 0 {
            return signed(0.0);
        }
        let bits = if quotient >= 1u64 << 52 {
            let biased = q + 52 + 1023;
            if biased >= 2047 {
                return signed(f64::INFINITY);
            }
            ((biased as u64) << 52) | (quotient - (1u64 << 52))
        } else {
            debug_assert_eq!(q, -1074);
            quotient
        };
        signed(f64::from_bits(bits))
    }

    /// Nearest double-double: `hi = RN(x)`, `lo = RN(x - hi)`.
    pub fn to_dd(&self) -> Result<DD> {
        let hi = self.to_f64();
        if !hi.is_finite() {
            return Err(Error::NonFinite(hi));
        }
        let rest = self - &Dyadic::from_f64(hi);
        DD::from_parts(hi, rest.to_f64())
    }

    /// `|self| / |other|` rounded to binary64 (about 1e-16 relative accuracy),
    /// valid far beyond the binary64 exponent range of either operand.
    pub fn ratio_to(&self, other: &Dyadic) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if other.is_zero() {
            return f64::INFINITY;
        }
        let (ma, ea) = self.scaled();
        let (mb, eb) = other.scaled();
        ldexp(ma / mb, ea - eb)
    }

    /// `(m, e)` with `|x| ~= m * 2^e`, `m` in `[1, 2]`.
    fn scaled(&self) -> (f64, i64) {
        let m = self.mant.magnitude();
        let nbits = m.bits() as i64;
        let top: u64 = if nbits > 64 {
            (m >> (nbits - 64) as usize).to_u64().unwrap()
        } else {
            (m << (64 - nbits) as usize).to_u64().unwrap()
        };
        (top as f64 * crate::fp::pow2(-63), self.exp + nbits - 1)
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Dyadic) -> Ordering {
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Dyadic) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(rhs.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &rhs.mant << (rhs.exp - e) as usize;
        Dyadic::new(a + b, e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -self.mant, exp: self.exp }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }
}

impl Sub<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Mul<&Dyadic> for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        // Product of odd mantissas is odd: already canonical.
        Dyadic { mant: &self.mant * &rhs.mant, exp: self.exp + rhs.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

/// Exact sum.
pub fn dyadic_add(a: &Dyadic, b: &Dyadic) -> Dyadic {
    a + b
}

/// Exact product.
pub fn dyadic_mul(a: &Dyadic, b: &Dyadic) -> Dyadic {
    a * b
}

const DIGIT_BITS: i64 = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;
/// Bit position of `2^0`. Products of two binary64 values reach down to 2^-2148.
const BIAS: i64 = 2176;
const NDIGITS: usize = 140;
const NORMALIZE_EVERY: u32 = 1 << 28;

/// A wide fixed-point accumulator that sums binary64 values and products of
/// binary64 pairs with no rounding at all.
///
/// Digits are base 2^32 held in `i64` in carry-save form, so an addition
/// touches at most six digits and carries are resolved lazily.
#[derive(Clone)]
pub struct ExactAccumulator {
    digits: Vec<i64>,
    lo: usize,
    hi: usize,
    pending: u32,
}

impl Default for ExactAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactAccumulator {
    pub fn new() -> Self {
        ExactAccumulator { digits: vec![0; NDIGITS], lo: NDIGITS, hi: 0, pending: 0 }
    }

    pub fn reset(&mut self) {
        if self.lo < NDIGITS {
            for d in &mut self.digits[self.lo..=self.hi] {
                *d = 0;
            }
        }
        self.lo = NDIGITS;
        self.hi = 0;
        self.pending = 0;
    }

    #[inline]
    fn add_signed(&mut self, negative: bool, mag: u128, exp: i64) {
        let pos = exp + BIAS;
        assert!(pos >= 0, "exponent {exp} below accumulator range");
        let d = (pos / DIGIT_BITS) as usize;
        let r = (pos % DIGIT_BITS) as u32;
        assert!(d + 5 < NDIGITS, "exponent {exp} above accumulator range");
        for i in 0..4 {
            let chunk = ((mag >> (32 * i)) as u64) & 0xffff_ffff;
            if chunk == 0 {
                continue;
            }
            let w = chunk << r;
            let low = (w as i64) & DIGIT_MASK;
            let high = (w >> 32) as i64;
            if negative {
                self.digits[d + i] -= low;
                self.digits[d + i + 1] -= high;
            } else {
                self.digits[d + i] += low;
                self.digits[d + i + 1] += high;
            }
        }
        self.lo = self.lo.min(d);
        self.hi = self.hi.max(d + 4);
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            self.normalize();
        }
    }

    /// Adds `m * 2^e` for a signed 128-bit integer `m` with `|m| < 2^120`.
    #[inline]
    pub fn add_int(&mut self, m: i128, e: i64) {
        if m != 0 {
            self.add_signed(m < 0, m.unsigned_abs(), e);
        }
    }

    #[inline]
    pub fn add_f64(&mut self, x: f64) {
        let (m, e) = decompose(x);
        self.add_int(m as i128, e as i64);
    }

    /// Adds `a * b * 2^shift` exactly.
    #[inline]
    pub fn add_product(&mut self, a: f64, b: f64, shift: i64) {
        let (ma, ea) = decompose(a);
        let (mb, eb) = decompose(b);
        if ma == 0 || mb == 0 {
            return;
        }
        self.add_int(ma as i128 * mb as i128, ea as i64 + eb as i64 + shift);
    }

    /// Adds the exact product of two double-doubles (four binary64 products).
    #[inline]
    pub fn add_dd_product(&mut self, a: DD, b: DD) {
        self.add_product(a.hi(), b.hi(), 0);
        self.add_product(a.hi(), b.lo(), 0);
        self.add_product(a.lo(), b.hi(), 0);
        self.add_product(a.lo(), b.lo(), 0);
    }

    pub fn add_dd(&mut self, a: DD) {
        self.add_f64(a.hi());
        self.add_f64(a.lo());
    }

    /// Resolves carries; afterwards digits below the top one lie in
    /// `[0, 2^32)` and the top digit carries the sign.
    fn normalize(&mut self) {
        self.pending = 0;
        if self.lo >= NDIGITS {
            return;
        }
        let mut i = self.lo;
        while i < NDIGITS - 1 {
            let carry = self.digits[i] >> DIGIT_BITS;
            if carry != 0 {
                self.digits[i] -= carry << DIGIT_BITS;
                self.digits[i + 1] += carry;
                self.hi = self.hi.max(i + 1);
            } else if i >= self.hi {
                break;
            }
            i += 1;
        }
    }

    pub fn is_zero(&mut self) -> bool {
        self.normalize();
        self.lo >= NDIGITS || self.digits[self.lo..=self.hi].iter().all(|&d| d == 0)
    }

    /// The exact accumulated value.
    pub fn value(&mut self) -> Dyadic {
        self.normalize();
        if self.lo >= NDIGITS {
            return Dyadic::zero();
        }
        let negative = self.digits[self.hi] < 0;
        let mut digits: Vec<i64> = self.digits[self.lo..=self.hi].to_vec();
        if negative {
            for d in &mut digits {
                *d = -*d;
            }
            // resolve carries of the negated digits
            let n = digits.len();
            for i in 0..n - 1 {
                let carry = digits[i] >> DIGIT_BITS;
                digits[i] -= carry << DIGIT_BITS;
                digits[i + 1] += carry;
            }
        }
        let words: Vec<u32> = digits.iter().map(|&d| d as u32).collect();
        debug_assert!(digits.iter().all(|&d| (0..=DIGIT_MASK).contains(&d)));
        let mag = BigUint::from_slice(&words);
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        Dyadic::new(
            BigInt::from_biguint(sign, mag),
            self.lo as i64 * DIGIT_BITS - BIAS,
        )
    }
}

/// Exact `x^T y`.
pub fn exact_dot(x: &[DD], y: &[DD]) -> Dyadic {
    assert_eq!(x.len(), y.len());
    let mut acc = ExactAccumulator::new();
    for (&a, &b) in x.iter().zip(y) {
        acc.add_dd_product(a, b);
    }
    acc.value()
}

/// A matrix of exact values, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Dyadic>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Dyadic>) -> Self {
        assert_eq!(data.len(), rows * cols);
        ExactMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Dyadic {
        &self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[Dyadic] {
        &self.data
    }

    pub fn from_dd(m: &MatrixDD) -> Self {
        ExactMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|&x| Dyadic::from_dd(x)).collect(),
        }
    }

    /// Nearest double-double of every entry.
    pub fn to_dd(&self) -> Result<MatrixDD> {
        let data = self.data.iter().map(Dyadic::to_dd).collect::<Result<Vec<_>>>()?;
        MatrixDD::from_vec(self.rows, self.cols, data)
    }
}

/// Exact `A * B`.
pub fn exact_gemm(a: &MatrixDD, b: &MatrixDD) -> Result<ExactMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let bt = b.transpose();
    let row = |i: usize| -> Vec<Dyadic> {
        let mut acc = ExactAccumulator::new();
        let arow = &a.data()[i * k..(i + 1) * k];
        (0..n)
            .map(|j| {
                acc.reset();
                let bcol = &bt.data()[j * k..(j + 1) * k];
                for (&x, &y) in arow.iter().zip(bcol) {
                    acc.add_dd_product(x, y);
                }
                acc.value()
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<Dyadic>> = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<Dyadic>> = (0..m).map(row).collect();
    Ok(ExactMatrix::new(m, n, rows.into_iter().flatten().collect()))
}

/// Componentwise error of a computed matrix against exact values.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rows: usize,
    pub cols: usize,
    /// Relative error `|computed - exact| / |exact|`, or the absolute error
    /// where the exact entry is zero.
    pub errors: Vec<f64>,
    /// Entries whose exact value is zero (their error is absolute).
    pub exact_zero: Vec<bool>,
}

impl ErrorReport {
    fn relative(&self) -> impl Iterator<Item = f64> + '_ {
        self.errors
            .iter()
            .zip(&self.exact_zero)
            .filter(|(_, &z)| !z)
            .map(|(&e, _)| e)
    }

    /// Largest relative error over entries with non-zero exact value.
    pub fn max_rel(&self) -> f64 {
        self.relative().fold(0.0, f64::max)
    }

    pub fn mean_rel(&self) -> f64 {
        let (sum, n) = self.relative().fold((0.0, 0usize), |(s, n), e| (s + e, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    pub fn zero_exact_count(&self) -> usize {
        self.exact_zero.iter().filter(|&&z| z).count()
    }
}

/// Per-element relative error of `computed` against `exact`.
pub fn componentwise_error(computed: &MatrixDD, exact: &ExactMatrix) -> Result<ErrorReport> {
    if computed.rows() != exact.rows() || computed.cols() != exact.cols() {
        return Err(Error::DimensionMismatch(format!(
            "computed {}x{} vs exact {}x{}",
            computed.rows(),
            computed.cols(),
            exact.rows(),
            exact.cols()
        )));
    }
    let pairs: Vec<(f64, bool)> = computed
        .data()
        .iter()
        .zip(exact.data())
        .map(|(&c, x)| {
            let diff = &Dyadic::from_dd(c) - x;
            if x.is_zero() {
                (diff.abs().to_f64(), true)
            } else {
                (diff.ratio_to(x), false)
            }
        })
        .collect();
    Ok(ErrorReport {
        rows: computed.rows(),
        cols: computed.cols(),
        errors: pairs.iter().map(|p| p.0).collect(),
        exact_zero: pairs.iter().map(|p| p.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::pow2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(m: i64, e: i64) -> Dyadic {
        Dyadic::from_i64(m, e)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> MatrixDD {
        let data = (0..rows * cols)
            .map(|_| {
                let hi: f64 = rng.random_range(-1.0..1.0) * pow2(rng.random_range(-40..40));
                let lo = rng.random_range(-0.5..0.5) * crate::fp::ulp(hi);
                DD::from_parts(hi, lo).unwrap()
            })
            .collect();
        MatrixDD::from_vec(rows, cols, data).unwrap()
    }

    /// Second, independent reference: plain Dyadic arithmetic.
    fn naive_dyadic_gemm(a: &MatrixDD, b: &MatrixDD) -> Vec<Dyadic> {
        let mut out = Vec::new();
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = Dyadic::zero();
                for p in 0..a.cols() {
                    s = dyadic_add(&s, &dyadic_mul(&Dyadic::from_dd(a.get(i, p)), &Dyadic::from_dd(b.get(p, j))));
                }
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn add_examples() {
        let a = d(3, -2);
        assert_eq!(dyadic_add(&a, &Dyadic::zero()), a);
        assert!(dyadic_add(&a, &-&a).is_zero());
        assert_eq!(dyadic_add(&d(3, -2), &d(1, -1)), d(5, -2));
    }

    #[test]
    fn mul_examples() {
        let a = d(3, -1);
        assert_eq!(dyadic_mul(&a, &Dyadic::one()), a);
        assert!(dyadic_mul(&a, &Dyadic::zero()).is_zero());
        assert_eq!(dyadic_mul(&a, &a), d(9, -2));
    }

    #[test]
    fn canonical_form() {
        let x = Dyadic::from_i64(12, 0);
        assert_eq!(x.mantissa(), BigUint::from(3u32));
        assert_eq!(x.exponent(), 2);
        assert_eq!(x.sign(), 1);
        assert_eq!(Dyadic::from_f64(-0.0), Dyadic::zero());
        assert_eq!(Dyadic::from_f64(-0.75).sign(), -1);
    }

    #[test]
    fn rounding_to_f64_ties_to_even() {
        // 1 + 2^-53 is a tie between 1 and 1 + 2^-52: rounds to even (1).
        let tie = Dyadic::one() + Dyadic::pow2(-53);
        assert_eq!(tie.to_f64(), 1.0);
        let tie_up = Dyadic::from_f64(1.0 + f64::EPSILON) + Dyadic::pow2(-53);
        assert_eq!(tie_up.to_f64(), 1.0 + 2.0 * f64::EPSILON);
        let above = tie + Dyadic::pow2(-200);
        assert_eq!(above.to_f64(), 1.0 + f64::EPSILON);
        assert_eq!(Dyadic::pow2(-1075).to_f64(), 0.0);
        assert_eq!((Dyadic::pow2(-1075) + Dyadic::pow2(-1100)).to_f64(), pow2(-1074));
        assert_eq!(Dyadic::pow2(1024).to_f64(), f64::INFINITY);
    }

    #[test]
    fn to_dd_nearest() {
        let x = Dyadic::one() + Dyadic::pow2(-60) + Dyadic::pow2(-200);
        let dd = x.to_dd().unwrap();
        assert_eq!((dd.hi(), dd.lo()), (1.0, pow2(-60)));
    }

    #[test]
    fn exact_gemm_identity_and_single_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 5, 5);
        let eye = MatrixDD::identity(5);
        assert_eq!(exact_gemm(&eye, &a).unwrap(), ExactMatrix::from_dd(&a));

        let x = DD::from_parts(1.0, pow2(-60)).unwrap();
        let m = MatrixDD::from_vec(1, 1, vec![x]).unwrap();
        let p = exact_gemm(&m, &m).unwrap();
        let expected = Dyadic::one() + Dyadic::pow2(-59) + Dyadic::pow2(-120);
        assert_eq!(p.get(0, 0), &expected);
    }

    #[test]
    fn exact_gemm_matches_naive_dyadic_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 8, 8);
            let b = random_matrix(&mut rng, 8, 8);
            let fast = exact_gemm(&a, &b).unwrap();
            assert_eq!(fast.data(), &naive_dyadic_gemm(&a, &b)[..]);
        }
    }

    #[test]
    fn exact_gemm_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 9);
        let b = random_matrix(&mut rng, 9, 4);
        let perm = [3, 8, 0, 5, 1, 7, 2, 6, 4];
        let ap = MatrixDD::from_fn(6, 9, |i, p| a.get(i, perm[p]));
        let bp = MatrixDD::from_fn(9, 4, |p, j| b.get(perm[p], j));
        assert_eq!(exact_gemm(&a, &b).unwrap(), exact_gemm(&ap, &bp).unwrap());
    }

    #[test]
    fn exact_gemm_rejects_mismatch() {
        let a = MatrixDD::zeros(2, 3);
        assert!(matches!(exact_gemm(&a, &a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn error_report_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 4, 4);
        let exact = ExactMatrix::from_dd(&a);
        let rep = componentwise_error(&a, &exact).unwrap();
        assert!(rep.errors.iter().all(|&e| e == 0.0));
        assert_eq!(rep.max_rel(), 0.0);

        // A single entry off by 2^-107 of its value.
        let x = DD::from_f64(1.5).unwrap();
        let target = Dyadic::from_f64(1.5);
        let off = &target + &Dyadic::from_f64(1.5 * pow2(-107));
        let one = MatrixDD::from_vec(1, 1, vec![x]).unwrap();
        let rep = componentwise_error(&one, &ExactMatrix::new(1, 1, vec![off.clone()])).unwrap();
        let expected = (&off - &target).ratio_to(&off);
        assert_eq!(rep.errors[0], expected);
        assert!((rep.errors[0] / pow2(-107) - 1.0).abs() < 1e-30f64.max(pow2(-100)));

        // zero exact entries fall back to absolute error and are tagged
        let rep = componentwise_error(&one, &ExactMatrix::new(1, 1, vec![Dyadic::zero()])).unwrap();
        assert_eq!(rep.errors[0], 1.5);
        assert_eq!(rep.zero_exact_count(), 1);
        assert_eq!(rep.max_rel(), 0.0);
    }

    #[test]
    fn error_report_max_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = random_matrix(&mut rng, 16, 16);
        let b = random_matrix(&mut rng, 16, 16);
        let exact = exact_gemm(&a, &b).unwrap();
        let approx = crate::cascgemm::ddgemm_naive_product(&a, &b).unwrap();
        let rep = componentwise_error(&approx, &exact).unwrap();
        let mut brute = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let x = exact.get(i, j);
                let diff = (&Dyadic::from_dd(approx.get(i, j)) - x).abs();
                let r = diff.ratio_to(x);
                brute = brute.max(r);
            }
        }
        assert_eq!(rep.max_rel(), brute);
        assert!(brute > 0.0);
    }

    #[test]
    fn accumulator_handles_extremes_and_signs() {
        let mut acc = ExactAccumulator::new();
        acc.add_product(f64::MAX, f64::MAX, 0);
        acc.add_product(-f64::MAX, f64::MAX, 0);
        acc.add_product(f64::from_bits(1), f64::from_bits(1), 0);
        assert_eq!(acc.value(), Dyadic::pow2(-2148));
        acc.reset();
        acc.add_f64(-1.0);
        acc.add_f64(pow2(-1074));
        assert_eq!(acc.value(), Dyadic::from_f64(-1.0) + Dyadic::pow2(-1074));
        acc.reset();
        assert!(acc.is_zero());
        assert_eq!(acc.value(), Dyadic::zero());
    }

    proptest! {
        #[test]
        fn f64_roundtrip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(Dyadic::from_f64(x).to_f64(), x);
        }

        #[test]
        fn accumulator_matches_dyadic(values in proptest::collection::vec((-1e200f64..1e200, -1e100f64..1e100), 1..40)) {
            let mut acc = ExactAccumulator::new();
            let mut reference = Dyadic::zero();
            for &(a, b) in &values {
                acc.add_product(a, b, 0);
                reference = &reference + &(Dyadic::from_f64(a) * Dyadic::from_f64(b));
            }
            prop_assert_eq!(acc.value(), reference);
        }
    }
}
