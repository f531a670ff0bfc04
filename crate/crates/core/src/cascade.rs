//! Splitting double-double operands into four binary64 parts.
//!
//! A row of `A` (column of `B`) is scaled by a shared power of two `2^e` so
//! every entry lies in `(-1, 1)`, then each entry is cut at fixed bit
//! boundaries `D0 < D1 < D2`:
//!
//! ```text
//! x * 2^-e = x0 + x1 * 2^-D0 + x2 * 2^-D1 + x3 * 2^-D2
//! ```
//!
//! `x0`, `x1`, `x2` hold at most `c0`, `c1`, `c2` significant bits on a grid
//! shared by the whole row, which is what keeps the low-order GEMM bins exact.

use crate::dd::DD;
use crate::error::{Error, Result};
use crate::exact::{Dyadic, ExactAccumulator};
use crate::fp::{floor_log2, pow2};
use crate::matrix::MatrixDD;

/// Largest supported inner depth for one split panel.
pub const MAX_DEPTH: usize = 256;

/// Bit budget of the four splits for one inner depth `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SplitWidths {
    pub k: usize,
    pub c0: u32,
    pub c1: u32,
    pub c2: u32,
    pub c3: u32,
    pub d0: u32,
    pub d1: u32,
    pub d2: u32,
}

impl SplitWidths {
    /// `log2` of the cascaded unit roundoff, i.e. `-(D2 + 53)`.
    pub fn eps_exponent(&self) -> i32 {
        -(self.d2 as i32 + 53)
    }

    /// Cascaded unit roundoff `2^-(D2 + 53)`.
    pub fn eps(&self) -> f64 {
        pow2(self.eps_exponent())
    }

    /// Checks the exact-bin constraints for this `k`.
    pub fn is_valid(&self) -> bool {
        let l = ceil_log2(self.k);
        let (c0, c1, c2) = (self.c0, self.c1, self.c2);
        self.k >= 1
            && c0 >= 1
            && c1 >= 1
            && c2 >= 1
            && self.c3 == 53
            && 2 * c0 + l <= 53
            && c0 + c1 + l + 1 <= 53
            && 2 * c1 + l + 2 <= 53
            && c0 + c2 + l + 2 <= 53
            && self.d0 == c0
            && self.d1 == c0 + c1
            && self.d2 == c0 + c1 + c2
    }
}

/// `ceil(log2 k)` for `k >= 1`.
pub fn ceil_log2(k: usize) -> u32 {
    usize::BITS - (k.max(1) - 1).leading_zeros()
}

/// Widest splits for depth `k`: `c0` maximized first, then `c1`, then `c2`.
pub fn select_widths(k: usize) -> Result<SplitWidths> {
    if k == 0 || k > MAX_DEPTH {
        return Err(Error::DepthOutOfRange { k, max: MAX_DEPTH });
    }
    let l = ceil_log2(k);
    let c0 = (53 - l) / 2;
    let c1 = (52 - l - c0).min((51 - l) / 2);
    let c2 = 51 - l - c0;
    let w = SplitWidths { k, c0, c1, c2, c3: 53, d0: c0, d1: c0 + c1, d2: c0 + c1 + c2 };
    debug_assert!(w.is_valid());
    Ok(w)
}

/// Per-row (or per-column) scale exponents: the scale of row `i` is `2^e[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleVector {
    pub exponents: Vec<i32>,
}

/// Exponent `e` with `2^(e-1) <= max|x| < 2^e`, or 0 for an all-zero input.
pub fn row_scale(values: &[DD]) -> i32 {
    scale_of(values.iter().copied())
}

fn scale_of(values: impl Iterator<Item = DD>) -> i32 {
    let mut best = DD::ZERO;
    for v in values {
        if v.hi().abs() > best.hi().abs() {
            best = v.abs();
        }
    }
    if best.is_zero() {
        return 0;
    }
    let e = floor_log2(best.hi()) + 1;
    // The low limb could only push |x| up to 2^e if it were not rounded away.
    if best.hi() + best.lo() >= pow2(e) {
        e + 1
    } else {
        e
    }
}

/// Precomputed constants of the branch-free splitter for one [`SplitWidths`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct Splitter {
    r0: f64,
    r1: f64,
    r2: f64,
    up_d0: f64,
    up_d1: f64,
    up_d2: f64,
}

impl Splitter {
    pub(crate) fn new(w: &SplitWidths) -> Splitter {
        // Adding and subtracting 1.5 * 2^(52-d) rounds to the grid 2^-d.
        let rounder = |d: u32| 1.5 * pow2(52 - d as i32);
        Splitter {
            r0: rounder(w.d0),
            r1: rounder(w.d1),
            r2: rounder(w.d2),
            up_d0: pow2(w.d0 as i32),
            up_d1: pow2(w.d1 as i32),
            up_d2: pow2(w.d2 as i32),
        }
    }

    /// Splits one limb `|y| < 1` into grid-aligned parts plus the exact remainder.
    #[inline(always)]
    fn limb(&self, y: f64) -> [f64; 4] {
        let t0 = (y + self.r0) - self.r0;
        let y1 = y - t0;
        let t1 = (y1 + self.r1) - self.r1;
        let y2 = y1 - t1;
        let t2 = (y2 + self.r2) - self.r2;
        let y3 = y2 - t2;
        [t0, t1, t2, y3]
    }

    /// Splits a scaled double-double `hi + lo` with `|hi + lo| < 1`.
    #[inline(always)]
    pub(crate) fn split(&self, hi: f64, lo: f64) -> [f64; 4] {
        let h = self.limb(hi);
        let l = self.limb(lo);
        [
            h[0] + l[0],
            (h[1] + l[1]) * self.up_d0,
            (h[2] + l[2]) * self.up_d1,
            (h[3] + l[3]) * self.up_d2,
        ]
    }
}

/// Multiplier pair for `2^-e`, exact whenever the scaled value is normal.
#[inline]
pub(crate) fn inverse_scale(e: i32) -> (f64, f64) {
    let first = -e / 2;
    (pow2(first), pow2(-e - first))
}

/// Splits `x * 2^-e` into `(x0, x1, x2, x3)`.
pub fn split_scalar(x: DD, e: i32, w: &SplitWidths) -> Result<[f64; 4]> {
    let (f1, f2) = inverse_scale(e);
    let hi = x.hi() * f1 * f2;
    let lo = x.lo() * f1 * f2;
    if hi.abs() >= 1.0 {
        return Err(Error::ScaleOutOfRange { exponent: -(e as i64) });
    }
    Ok(Splitter::new(w).split(hi, lo))
}

/// Row-scaled splits `A0..A3` of an `m x k` panel.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPanelA {
    pub m: usize,
    pub k: usize,
    pub widths: SplitWidths,
    /// Four row-major `m x k` matrices.
    pub splits: [Vec<f64>; 4],
    pub scale: ScaleVector,
}

/// Column-scaled splits `B0..B3` of a `k x n` panel plus the derived `B4..B6`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPanelB {
    pub k: usize,
    pub n: usize,
    pub widths: SplitWidths,
    /// Seven row-major `k x n` matrices.
    pub splits: [Vec<f64>; 7],
    pub scale: ScaleVector,
}

fn check_depth(k: usize, w: &SplitWidths) -> Result<()> {
    if k > w.k {
        return Err(Error::DepthOutOfRange { k, max: w.k });
    }
    Ok(())
}

/// Splits the whole of `a` (its column count is the panel depth).
pub fn split_panel_a(a: &MatrixDD, w: &SplitWidths) -> Result<SplitPanelA> {
    split_a_block(a, 0, a.rows(), 0, a.cols(), w)
}

/// Splits rows `r0..r0+m`, columns `p0..p0+k` of `a`.
pub(crate) fn split_a_block(
    a: &MatrixDD,
    r0: usize,
    m: usize,
    p0: usize,
    k: usize,
    w: &SplitWidths,
) -> Result<SplitPanelA> {
    check_depth(k, w)?;
    let sp = Splitter::new(w);
    let mut splits: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; m * k]);
    let mut exponents = Vec::with_capacity(m);
    for i in 0..m {
        let row = &a.row(r0 + i)[p0..p0 + k];
        let e = row_scale(row);
        exponents.push(e);
        let (f1, f2) = inverse_scale(e);
        for (p, x) in row.iter().enumerate() {
            let parts = sp.split(x.hi() * f1 * f2, x.lo() * f1 * f2);
            for s in 0..4 {
                splits[s][i * k + p] = parts[s];
            }
        }
    }
    Ok(SplitPanelA { m, k, widths: *w, splits, scale: ScaleVector { exponents } })
}

/// Splits the whole of `b` (its row count is the panel depth).
pub fn split_panel_b(b: &MatrixDD, w: &SplitWidths) -> Result<SplitPanelB> {
    split_b_block(b, 0, b.rows(), 0, b.cols(), w)
}

/// Column scale exponents of rows `p0..p0+k`, columns `c0..c0+n` of `b`.
pub(crate) fn column_scales(b: &MatrixDD, p0: usize, k: usize, c0: usize, n: usize) -> Vec<i32> {
    (0..n)
        .map(|j| scale_of((0..k).map(|p| b.get(p0 + p, c0 + j))))
        .collect()
}

/// The seven B-side splits of one element, given its column's splitter constants.
#[inline(always)]
pub(crate) fn split_b_element(sp: &Splitter, f: &BCombine, hi: f64, lo: f64) -> [f64; 7] {
    let [b0, b1, b2, b3] = sp.split(hi, lo);
    [
        b0,
        b1,
        b2,
        b3,
        b2 + b3 * f.inv_c2,
        b1 + b2 * f.inv_c1 + b3 * f.inv_c12,
        b0 + b1 * f.inv_d0 + b2 * f.inv_d1 + b3 * f.inv_d2,
    ]
}

/// Power-of-two weights of the derived B splits.
#[derive(Clone, Copy, Debug)]
pub(crate) struct BCombine {
    inv_c2: f64,
    inv_c1: f64,
    inv_c12: f64,
    inv_d0: f64,
    inv_d1: f64,
    inv_d2: f64,
}

impl BCombine {
    pub(crate) fn new(w: &SplitWidths) -> BCombine {
        BCombine {
            inv_c2: pow2(-(w.c2 as i32)),
            inv_c1: pow2(-(w.c1 as i32)),
            inv_c12: pow2(-((w.c1 + w.c2) as i32)),
            inv_d0: pow2(-(w.d0 as i32)),
            inv_d1: pow2(-(w.d1 as i32)),
            inv_d2: pow2(-(w.d2 as i32)),
        }
    }
}

pub(crate) fn split_b_block(
    b: &MatrixDD,
    p0: usize,
    k: usize,
    c0: usize,
    n: usize,
    w: &SplitWidths,
) -> Result<SplitPanelB> {
    check_depth(k, w)?;
    let sp = Splitter::new(w);
    let comb = BCombine::new(w);
    let exponents = column_scales(b, p0, k, c0, n);
    let factors: Vec<(f64, f64)> = exponents.iter().map(|&e| inverse_scale(e)).collect();
    let mut splits: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; k * n]);
    for p in 0..k {
        let row = &b.row(p0 + p)[c0..c0 + n];
        for (j, x) in row.iter().enumerate() {
            let (f1, f2) = factors[j];
            let parts = split_b_element(&sp, &comb, x.hi() * f1 * f2, x.lo() * f1 * f2);
            for s in 0..7 {
                splits[s][p * n + j] = parts[s];
            }
        }
    }
    Ok(SplitPanelB { k, n, widths: *w, splits, scale: ScaleVector { exponents } })
}

/// Exact value `2^e (s0 + s1 2^-D0 + s2 2^-D1 + s3 2^-D2)` of one split element.
pub fn split_value(parts: [f64; 4], e: i32, w: &SplitWidths) -> Dyadic {
    let mut acc = ExactAccumulator::new();
    let e = e as i64;
    acc.add_product(parts[0], 1.0, e);
    acc.add_product(parts[1], 1.0, e - w.d0 as i64);
    acc.add_product(parts[2], 1.0, e - w.d1 as i64);
    acc.add_product(parts[3], 1.0, e - w.d2 as i64);
    acc.value()
}

/// Rebuilds the double-double entries represented by split panels, each
/// rounded once to the nearest double-double.
pub trait Reconstruct {
    fn reconstruct(&self) -> Result<MatrixDD>;
}

impl Reconstruct for SplitPanelA {
    fn reconstruct(&self) -> Result<MatrixDD> {
        let mut out = MatrixDD::zeros(self.m, self.k);
        for i in 0..self.m {
            for p in 0..self.k {
                let idx = i * self.k + p;
                let parts = std::array::from_fn(|s| self.splits[s][idx]);
                out.set(i, p, split_value(parts, self.scale.exponents[i], &self.widths).to_dd()?);
            }
        }
        Ok(out)
    }
}

impl Reconstruct for SplitPanelB {
    fn reconstruct(&self) -> Result<MatrixDD> {
        let mut out = MatrixDD::zeros(self.k, self.n);
        for p in 0..self.k {
            for j in 0..self.n {
                let idx = p * self.n + j;
                let parts = std::array::from_fn(|s| self.splits[s][idx]);
                out.set(p, j, split_value(parts, self.scale.exponents[j], &self.widths).to_dd()?);
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`Reconstruct::reconstruct`].
pub fn reconstruct<P: Reconstruct>(panel: &P) -> Result<MatrixDD> {
    panel.reconstruct()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::ulp;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dd(hi: f64, lo: f64) -> DD {
        DD::from_parts(hi, lo).unwrap()
    }

    fn random_dd(rng: &mut ChaCha8Rng, spread: i32) -> DD {
        let hi: f64 = rng.random_range(-1.0..1.0) * pow2(rng.random_range(-spread..=spread));
        let lo = rng.random_range(-0.5..0.5) * ulp(hi);
        dd(hi, lo)
    }

    #[test]
    fn widths_examples() {
        let w = select_widths(256).unwrap();
        assert_eq!((w.c0, w.c1, w.c2, w.c3), (22, 21, 21, 53));
        assert_eq!((w.d0, w.d1, w.d2), (22, 43, 64));
        assert_eq!(w.eps(), pow2(-117));
        assert_eq!(select_widths(64).unwrap().c0, 23);
        let w = select_widths(1).unwrap();
        assert_eq!((w.c0, w.c1, w.c2), (26, 25, 25));
        assert!(select_widths(0).is_err());
        assert!(matches!(select_widths(257), Err(Error::DepthOutOfRange { k: 257, .. })));
    }

    #[test]
    fn widths_are_valid_and_greedy() {
        for k in 1..=MAX_DEPTH {
            let w = select_widths(k).unwrap();
            assert!(w.is_valid(), "k={k}");
            assert!(w.d2 + 53 >= 106, "k={k}");
            let bump = |f: &dyn Fn(&mut SplitWidths)| {
                let mut v = w;
                f(&mut v);
                v.d0 = v.c0;
                v.d1 = v.c0 + v.c1;
                v.d2 = v.c0 + v.c1 + v.c2;
                v.is_valid()
            };
            assert!(!bump(&|v| v.c0 += 1), "c0 not maximal at k={k}");
            assert!(!bump(&|v| v.c1 += 1), "c1 not maximal at k={k}");
            assert!(!bump(&|v| v.c2 += 1), "c2 not maximal at k={k}");
        }
    }

    /// Worst-case bin sums with every split at its largest magnitude:
    /// |x0| = 1, |x1| = 1/2, |x2| = 1/2 + 2^(D1-54). Every partial sum must
    /// stay within 2^53 units of its bin's grid.
    #[test]
    fn worst_case_bins_fit_in_binary64() {
        for k in 1..=MAX_DEPTH {
            let w = select_widths(k).unwrap();
            let (c0, c1, c2) = (w.c0 as i64, w.c1 as i64, w.c2 as i64);
            let kk = Dyadic::from_i64(k as i64, 0);
            let limit = Dyadic::pow2(53);
            let x0 = Dyadic::one();
            let x1 = Dyadic::pow2(-1);
            let x2 = Dyadic::pow2(-1) + Dyadic::pow2(w.d1 as i64 - 54);
            // bin 0: x0*x0 on grid 2^-2c0
            let bin0 = (&kk * &(&x0 * &x0)).shl(2 * c0);
            // bin 1: x0*x1 twice on grid 2^-(c0+c1)
            let bin1 = (&kk * &(&(&x0 * &x1) + &(&x1 * &x0))).shl(c0 + c1);
            // bin 2: x0*x2 twice plus x1*x1 aligned by 2^(c1-c0)
            let term = &(&(&x0 * &x2) + &(&x2 * &x0)) + &(&x1 * &x1).shl(c1 - c0);
            let bin2 = (&kk * &term).shl(c0 + c1.max(c2));
            assert!(bin0 <= limit, "bin0 overflows at k={k}");
            assert!(bin1 <= limit, "bin1 overflows at k={k}");
            assert!(bin2 <= limit, "bin2 overflows at k={k}");
        }
    }

    #[test]
    fn row_scale_examples() {
        assert_eq!(row_scale(&[DD::ONE]), 1);
        assert_eq!(row_scale(&[DD::ZERO; 3]), 0);
        let row = [dd(0.75, 0.0), dd(-3.5, 0.0)];
        let e = row_scale(&row);
        assert_eq!(e, 2);
        assert!(3.5 <= pow2(e) && pow2(e) <= 7.0);
        assert_eq!(row_scale(&[dd(-4.0, -pow2(-60))]), 3);
        assert_eq!(row_scale(&[dd(f64::MAX, 0.0)]), 1024);
        assert_eq!(row_scale(&[dd(pow2(-1074), 0.0)]), -1073);
    }

    #[test]
    fn split_scalar_examples() {
        let w = select_widths(256).unwrap();
        assert_eq!(split_scalar(DD::ONE, 1, &w).unwrap(), [0.5, 0.0, 0.0, 0.0]);
        let x = dd(1.0 + pow2(-30), pow2(-70));
        assert_eq!(split_scalar(x, 1, &w).unwrap(), [0.5, pow2(-9), 0.0, pow2(-7)]);
        assert!(split_scalar(dd(2.0, 0.0), 1, &w).is_err());
    }

    fn assert_split_bound(x: DD, e: i32, w: &SplitWidths, row_max: f64) {
        let parts = split_scalar(x, e, w).unwrap();
        let err = (&split_value(parts, e, w) - &Dyadic::from_dd(x)).abs();
        let bound = Dyadic::from_f64(row_max).shl(w.eps_exponent() as i64 + 1);
        assert!(err <= bound, "x={x:?} e={e} parts={parts:?}");
        // grid exactness of the three leading splits
        for (s, bits) in [(0, w.c0), (1, w.c1), (2, w.c2)] {
            let v = parts[s] * pow2(bits as i32);
            assert_eq!(v, v.trunc(), "split {s} off grid: {parts:?}");
            assert!(v.abs() <= pow2(bits as i32), "split {s} too wide: {parts:?}");
        }
    }

    #[test]
    fn split_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &k in &[1usize, 16, 64, 256] {
            let w = select_widths(k).unwrap();
            for _ in 0..2000 {
                let row: Vec<DD> = (0..k).map(|_| random_dd(&mut rng, 30)).collect();
                let e = row_scale(&row);
                let max = row.iter().fold(0.0f64, |m, x| m.max(x.hi().abs()));
                for &x in &row {
                    assert_split_bound(x, e, &w, max);
                }
            }
        }
    }

    #[test]
    fn tail_only_elements_lose_at_most_one_rounding() {
        let w = select_widths(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let x = dd(rng.random_range(-1.0..1.0) * pow2(-80), 0.0);
            let parts = split_scalar(x, 1, &w).unwrap();
            assert_eq!(&parts[..3], &[0.0; 3]);
            let err = (&split_value(parts, 1, &w) - &Dyadic::from_dd(x)).abs();
            assert!(err <= Dyadic::from_dd(x).abs().shl(-53));
        }
    }

    #[test]
    fn panel_a_examples() {
        let w = select_widths(256).unwrap();
        let z = split_panel_a(&MatrixDD::zeros(3, 4), &w).unwrap();
        assert!(z.splits.iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert_eq!(z.scale.exponents, vec![0; 3]);
        assert_eq!(reconstruct(&z).unwrap(), MatrixDD::zeros(3, 4));

        let one = MatrixDD::from_f64(1, 1, &[1.5]).unwrap();
        let p = split_panel_a(&one, &w).unwrap();
        assert_eq!(p.scale.exponents, vec![1]);
        assert_eq!([p.splits[0][0], p.splits[1][0], p.splits[2][0], p.splits[3][0]], [0.75, 0.0, 0.0, 0.0]);

        let eye = MatrixDD::identity(5);
        assert_eq!(reconstruct(&split_panel_a(&eye, &w).unwrap()).unwrap(), eye);
        assert_eq!(reconstruct(&split_panel_b(&eye, &w).unwrap()).unwrap(), eye);
    }

    #[test]
    fn panel_reconstruction_random() {
        let w = select_widths(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = MatrixDD::from_fn(8, 16, |_, _| random_dd(&mut rng, 20));
        let back = reconstruct(&split_panel_a(&a, &w).unwrap()).unwrap();
        for i in 0..8 {
            let max = a.row(i).iter().fold(0.0f64, |m, x| m.max(x.hi().abs()));
            let bound = Dyadic::from_f64(max).shl(w.eps_exponent() as i64 + 1);
            for p in 0..16 {
                let err = (&Dyadic::from_dd(back.get(i, p)) - &Dyadic::from_dd(a.get(i, p))).abs();
                assert!(err <= bound);
            }
        }
    }

    #[test]
    fn panel_b_derived_splits() {
        let w = select_widths(256).unwrap();
        // entries with at most 22 significant bits: only B0 is populated
        let b = MatrixDD::from_f64(2, 3, &[1.0, 3.0, -5.0, 0.5, 7.0, 1.25]).unwrap();
        let p = split_panel_b(&b, &w).unwrap();
        for idx in 0..6 {
            assert_eq!(p.splits[2][idx], 0.0);
            assert_eq!(p.splits[3][idx], 0.0);
            assert_eq!(p.splits[4][idx], p.splits[2][idx]);
            assert_eq!(p.splits[5][idx], p.splits[1][idx]);
            assert_eq!(p.splits[6][idx], p.splits[0][idx] + p.splits[1][idx] * pow2(-22));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let b = MatrixDD::from_fn(16, 8, |_, _| random_dd(&mut rng, 10));
        let p = split_panel_b(&b, &w).unwrap();
        for idx in 0..16 * 8 {
            let parts = std::array::from_fn(|s| p.splits[s][idx]);
            let exact = split_value(parts, 0, &w);
            let err = (&Dyadic::from_f64(p.splits[6][idx]) - &exact).abs();
            assert!(err <= exact.abs().shl(-51), "B6 at {idx}");
        }
    }

    #[test]
    fn panels_reject_excess_depth() {
        let w = select_widths(4).unwrap();
        assert!(split_panel_a(&MatrixDD::zeros(2, 5), &w).is_err());
        assert!(split_panel_b(&MatrixDD::zeros(5, 2), &w).is_err());
    }

    proptest! {
        #[test]
        fn split_bound_holds(
            hi in -1e30f64..1e30,
            frac in -0.5f64..0.5,
            k in 1usize..=256,
            headroom in 0i32..40,
        ) {
            prop_assume!(hi != 0.0);
            let x = dd(hi, frac * ulp(hi));
            let w = select_widths(k).unwrap();
            let e = row_scale(&[x]) + headroom;
            assert_split_bound(x, e, &w, pow2(e - 1));
        }

        #[test]
        fn conformal_scale_shift(p in -200i32..200, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = select_widths(64).unwrap();
            let row: Vec<DD> = (0..8).map(|_| random_dd(&mut rng, 8)).collect();
            let shifted: Vec<DD> = row.iter().map(|x| x.scale_pow2(p as i64).unwrap()).collect();
            let e = row_scale(&row);
            prop_assert_eq!(row_scale(&shifted), e + p);
            for (x, y) in row.iter().zip(&shifted) {
                prop_assert_eq!(split_scalar(*x, e, &w).unwrap(), split_scalar(*y, e + p, &w).unwrap());
            }
        }
    }
}
