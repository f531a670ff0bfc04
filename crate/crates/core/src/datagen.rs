//! Seeded test-matrix generators.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)`, which is
//! platform independent, so a given spec always yields the same bytes.
//!
//! * uniform: binary64 values uniform in `[lo, hi]`, extended with random
//!   bits below the binary64 significand.
//! * wide-range: every row of `A` and column of `B` gets its own range
//!   `[x, y]` whose endpoints have random signs and log-uniform magnitudes in
//!   `[2^-199, 2^66)` (roughly `1e-60..1e20`); entries are uniform in the range.
//! * ill-conditioned: `A = Q` from a double-double Householder QR of a random
//!   matrix and `B = Q^T C`, where `C` has entries of magnitude in `(t, 10t)`
//!   and a single planted 1 per column. `A B` is then close to `C` while the
//!   individual products are of order one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cascgemm::ddgemm_naive_product;
use crate::dd::{dd_add, dd_mul, two_prod, DD};
use crate::error::{Error, Result};
use crate::fp::{floor_log2, ldexp};
use crate::matrix::MatrixDD;

/// Lowest and highest binary exponents of wide-range entries.
pub const WIDE_MIN_EXP: i32 = -199;
pub const WIDE_MAX_EXP: i32 = 65;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    Uniform,
    WideRange,
    IllCond,
}

impl std::str::FromStr for GenKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(GenKind::Uniform),
            "widerange" => Ok(GenKind::WideRange),
            "illcond" => Ok(GenKind::IllCond),
            _ => Err(format!("unknown kind '{s}' (expected uniform, widerange or illcond)")),
        }
    }
}

/// Generator request. `A` is `m x k`, `B` is `k x n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Ill-conditioned target magnitude `t`.
    pub tolerance: f64,
    /// Uniform range.
    pub lo: f64,
    pub hi: f64,
}

impl GenSpec {
    pub fn uniform(m: usize, n: usize, k: usize, lo: f64, hi: f64, seed: u64) -> Self {
        GenSpec { kind: GenKind::Uniform, m, n, k, seed, tolerance: 0.0, lo, hi }
    }

    pub fn widerange(m: usize, n: usize, k: usize, seed: u64) -> Self {
        GenSpec { kind: GenKind::WideRange, m, n, k, seed, tolerance: 0.0, lo: 0.0, hi: 0.0 }
    }

    pub fn illcond(n: usize, t: f64, seed: u64) -> Self {
        GenSpec { kind: GenKind::IllCond, m: n, n, k: n, seed, tolerance: t, lo: 0.0, hi: 0.0 }
    }

    fn check_sizes(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::InvalidSpec(format!("sizes must be positive: {}x{}x{}", self.m, self.n, self.k)));
        }
        Ok(())
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `x` extended by 60 random bits just below its last significand bit,
/// away from zero, renormalized into a double-double.
fn extend(rng: &mut ChaCha8Rng, x: f64) -> DD {
    let bits: u64 = rng.random::<u64>() >> 4;
    if x == 0.0 {
        return DD::ZERO;
    }
    let e = floor_log2(x) as i64;
    let ext = ldexp(bits as f64, e - 112).copysign(x);
    DD::from_parts(x, ext).unwrap_or(DD::from_raw(x, 0.0))
}

fn within(v: DD, lo: f64, hi: f64) -> bool {
    (v.hi() < hi || (v.hi() == hi && v.lo() <= 0.0)) && (v.hi() > lo || (v.hi() == lo && v.lo() >= 0.0))
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> MatrixDD {
    MatrixDD::from_fn(rows, cols, |_, _| {
        let u: f64 = rng.random();
        let x = (lo + (hi - lo) * u).clamp(lo, hi);
        let v = extend(rng, x);
        if within(v, lo, hi) {
            v
        } else {
            DD::from_raw(x, 0.0)
        }
    })
}

fn check_range(spec: &GenSpec) -> Result<()> {
    if !spec.lo.is_finite() || !spec.hi.is_finite() || spec.lo > spec.hi {
        return Err(Error::InvalidSpec(format!("invalid range [{}, {}]", spec.lo, spec.hi)));
    }
    Ok(())
}

/// One `m x n` uniform matrix.
pub fn gen_uniform(spec: &GenSpec) -> Result<MatrixDD> {
    check_range(spec)?;
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::InvalidSpec("sizes must be positive".into()));
    }
    Ok(uniform_matrix(&mut rng_for(spec.seed), spec.m, spec.n, spec.lo, spec.hi))
}

/// `A` (`m x k`) then `B` (`k x n`) from one uniform stream.
pub fn gen_uniform_pair(spec: &GenSpec) -> Result<(MatrixDD, MatrixDD)> {
    check_range(spec)?;
    spec.check_sizes()?;
    let mut rng = rng_for(spec.seed);
    let a = uniform_matrix(&mut rng, spec.m, spec.k, spec.lo, spec.hi);
    let b = uniform_matrix(&mut rng, spec.k, spec.n, spec.lo, spec.hi);
    Ok((a, b))
}

/// Value range `[lo, hi]` of one wide-range row or column. Each endpoint
/// has a random sign and a log-uniform magnitude in `[2^-199, 2^66)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WideRange {
    pub lo: f64,
    pub hi: f64,
}

impl WideRange {
    /// Smallest and largest binary exponent an entry can take.
    pub fn exponent_bounds(&self) -> (i32, i32) {
        let top = floor_log2(self.lo.abs().max(self.hi.abs()));
        if self.lo.signum() != self.hi.signum() {
            (WIDE_MIN_EXP, top)
        } else {
            (floor_log2(self.lo.abs().min(self.hi.abs())), top)
        }
    }
}

fn draw_endpoint(rng: &mut ChaCha8Rng) -> f64 {
    let e = rng.random_range(WIDE_MIN_EXP..=WIDE_MAX_EXP);
    let mant: f64 = 1.0 + rng.random::<f64>();
    let x = ldexp(mant, e as i64);
    if rng.random::<bool>() {
        -x
    } else {
        x
    }
}

fn draw_range(rng: &mut ChaCha8Rng) -> WideRange {
    let a = draw_endpoint(rng);
    let b = draw_endpoint(rng);
    WideRange { lo: a.min(b), hi: a.max(b) }
}

fn draw_wide(rng: &mut ChaCha8Rng, r: &WideRange) -> DD {
    let floor = ldexp(1.0, WIDE_MIN_EXP as i64);
    loop {
        let u: f64 = rng.random();
        let x = (r.lo + (r.hi - r.lo) * u).clamp(r.lo, r.hi);
        // ranges straddling zero can produce values below the floor
        if x.abs() < floor {
            continue;
        }
        let v = extend(rng, x);
        return if within(v, r.lo, r.hi) { v } else { DD::from_raw(x, 0.0) };
    }
}

/// Wide-range `A` and `B` plus the windows chosen for each row of `A` and
/// each column of `B`.
pub fn gen_widerange_with_ranges(spec: &GenSpec) -> Result<(MatrixDD, MatrixDD, Vec<WideRange>, Vec<WideRange>)> {
    spec.check_sizes()?;
    let mut rng = rng_for(spec.seed);
    let row_ranges: Vec<WideRange> = (0..spec.m).map(|_| draw_range(&mut rng)).collect();
    let mut a = MatrixDD::zeros(spec.m, spec.k);
    for (i, r) in row_ranges.iter().enumerate() {
        for p in 0..spec.k {
            a.set(i, p, draw_wide(&mut rng, r));
        }
    }
    let col_ranges: Vec<WideRange> = (0..spec.n).map(|_| draw_range(&mut rng)).collect();
    let mut b = MatrixDD::zeros(spec.k, spec.n);
    for (j, r) in col_ranges.iter().enumerate() {
        for p in 0..spec.k {
            b.set(p, j, draw_wide(&mut rng, r));
        }
    }
    Ok((a, b, row_ranges, col_ranges))
}

/// Wide-range `A` (`m x k`) and `B` (`k x n`).
pub fn gen_widerange(spec: &GenSpec) -> Result<(MatrixDD, MatrixDD)> {
    let (a, b, _, _) = gen_widerange_with_ranges(spec)?;
    Ok((a, b))
}

fn dd_sqrt(x: DD) -> DD {
    if x.is_zero() {
        return DD::ZERO;
    }
    let s = x.hi().sqrt();
    let (p, e) = two_prod(s, s);
    let r = dd_add(x, -DD::from_raw(p, e));
    let corr = r.hi() / (2.0 * s);
    dd_add(DD::from_raw(s, 0.0), DD::from_raw(corr, 0.0))
}

fn dd_div(a: DD, b: DD) -> DD {
    let q1 = a.hi() / b.hi();
    let r = dd_add(a, -dd_mul(DD::from_raw(q1, 0.0), b));
    let q2 = r.hi() / b.hi();
    let r = dd_add(r, -dd_mul(DD::from_raw(q2, 0.0), b));
    let q3 = r.hi() / b.hi();
    dd_add(dd_add(DD::from_raw(q1, 0.0), DD::from_raw(q2, 0.0)), DD::from_raw(q3, 0.0))
}

/// Orthogonal factor of `M = QR` by Householder reflections in
/// double-double, with columns signed so that `diag(R) >= 0`.
pub fn householder_qr_dd(m: &MatrixDD) -> Result<MatrixDD> {
    let n = m.rows();
    if m.cols() != n || n == 0 {
        return Err(Error::InvalidSpec(format!("QR needs a non-empty square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let mut r: Vec<DD> = m.data().to_vec();
    let mut reflectors: Vec<(Vec<DD>, DD)> = Vec::with_capacity(n);
    let mut flips = vec![false; n];
    for j in 0..n {
        if j == n - 1 {
            // a 1x1 reflector is only a sign
            let d = r[j * n + j];
            if d.is_zero() {
                return Err(Error::Breakdown(j));
            }
            flips[j] = d.hi() < 0.0;
            reflectors.push((vec![DD::ZERO], DD::ZERO));
            continue;
        }
        let x: Vec<DD> = (j..n).map(|i| r[i * n + j]).collect();
        let norm2 = x.iter().fold(DD::ZERO, |s, &v| dd_add(s, dd_mul(v, v)));
        if norm2.is_zero() {
            return Err(Error::Breakdown(j));
        }
        let norm = dd_sqrt(norm2);
        let alpha = if x[0].hi() >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] = dd_add(v[0], -alpha);
        let vtv = v.iter().fold(DD::ZERO, |s, &a| dd_add(s, dd_mul(a, a)));
        let beta = dd_div(DD::from_raw(2.0, 0.0), vtv);
        for col in j..n {
            let dot = (j..n).fold(DD::ZERO, |s, i| dd_add(s, dd_mul(v[i - j], r[i * n + col])));
            let f = dd_mul(beta, dot);
            for i in j..n {
                r[i * n + col] = dd_add(r[i * n + col], -dd_mul(f, v[i - j]));
            }
        }
        flips[j] = alpha.hi() < 0.0;
        reflectors.push((v, beta));
    }
    // Q = H0 H1 ... H(n-1) applied to the identity from the right end.
    let mut q = MatrixDD::identity(n);
    for (j, (v, beta)) in reflectors.iter().enumerate().rev() {
        for col in 0..n {
            let dot = (j..n).fold(DD::ZERO, |s, i| dd_add(s, dd_mul(v[i - j], q.get(i, col))));
            let f = dd_mul(*beta, dot);
            for i in j..n {
                q.set(i, col, dd_add(q.get(i, col), -dd_mul(f, v[i - j])));
            }
        }
    }
    for (j, &flip) in flips.iter().enumerate() {
        if flip {
            for i in 0..n {
                q.set(i, j, -q.get(i, j));
            }
        }
    }
    Ok(q)
}

/// Ill-conditioned `(A, B, C)` with `A B ~= C`.
pub fn gen_illcond(spec: &GenSpec) -> Result<(MatrixDD, MatrixDD, MatrixDD)> {
    spec.check_sizes()?;
    if spec.m != spec.n || spec.n != spec.k {
        return Err(Error::InvalidSpec(format!(
            "ill-conditioned matrices must be square: {}x{}x{}",
            spec.m, spec.n, spec.k
        )));
    }
    let t = spec.tolerance;
    if !(t > 0.0 && (10.0 * t).is_finite()) {
        return Err(Error::InvalidSpec(format!("tolerance must be positive and finite, got {t}")));
    }
    let n = spec.n;
    let mut rng = rng_for(spec.seed);
    let m = uniform_matrix(&mut rng, n, n, -1.0, 1.0);
    let q = householder_qr_dd(&m)?;
    let mut c = MatrixDD::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mag = loop {
                let v = t * (1.0 + 9.0 * rng.random::<f64>());
                if v > t && v < 10.0 * t {
                    break v;
                }
            };
            let v = if rng.random::<bool>() { -mag } else { mag };
            c.set(i, j, DD::from_raw(v, 0.0));
        }
    }
    for j in 0..n {
        let i = rng.random_range(0..n);
        c.set(i, j, DD::ONE);
    }
    let b = ddgemm_naive_product(&q.transpose(), &c)?;
    Ok((q, b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_gemm, Dyadic};
    use crate::fp::pow2;

    fn orthogonality_residual(q: &MatrixDD) -> f64 {
        let p = exact_gemm(q, &q.transpose()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..q.rows() {
            for j in 0..q.rows() {
                let target = if i == j { Dyadic::one() } else { Dyadic::zero() };
                worst = worst.max((p.get(i, j) - &target).abs().to_f64());
            }
        }
        worst
    }

    #[test]
    fn uniform_is_deterministic_and_in_range() {
        let spec = GenSpec::uniform(8, 8, 8, -1.0, 1.0, 7);
        let a = gen_uniform(&spec).unwrap();
        assert_eq!(a, gen_uniform(&spec).unwrap());
        assert_ne!(a, gen_uniform(&GenSpec { seed: 8, ..spec }).unwrap());
        for x in a.data() {
            assert!(within(*x, -1.0, 1.0));
            assert!(x.lo().abs() <= pow2(-53) * x.hi().abs());
            assert!(x.is_normalized());
        }
        // the extension actually populates the low limb
        assert!(a.data().iter().filter(|x| x.lo() != 0.0).count() > 50);
        assert!(gen_uniform(&GenSpec::uniform(2, 2, 2, 1.0, -1.0, 0)).is_err());
        let narrow = gen_uniform(&GenSpec::uniform(20, 20, 1, 0.5, 0.5000001, 3)).unwrap();
        assert!(narrow.data().iter().all(|x| within(*x, 0.5, 0.5000001)));
    }

    #[test]
    fn widerange_ranges_and_spread() {
        let spec = GenSpec::widerange(12, 9, 30, 5);
        let (a, b, rows, cols) = gen_widerange_with_ranges(&spec).unwrap();
        assert_eq!(gen_widerange(&spec).unwrap(), (a.clone(), b.clone()));
        for x in a.data().iter().chain(b.data()) {
            let mag = x.hi().abs();
            assert!((1e-60..=1e20).contains(&mag), "{mag:e}");
        }
        let check = |vals: Vec<DD>, r: &WideRange| {
            let (emin, emax) = r.exponent_bounds();
            let exps: Vec<i32> = vals.iter().map(|x| floor_log2(x.hi())).collect();
            let spread = exps.iter().max().unwrap() - exps.iter().min().unwrap();
            assert!(spread <= emax - emin);
            assert!(exps.iter().all(|&e| (emin..=emax).contains(&e)));
            assert!(vals.iter().all(|x| within(*x, r.lo, r.hi)));
        };
        for (i, r) in rows.iter().enumerate() {
            check(a.row(i).to_vec(), r);
        }
        for (j, r) in cols.iter().enumerate() {
            check((0..30).map(|p| b.get(p, j)).collect(), r);
        }
        // both same-sign and mixed-sign ranges occur
        let all: Vec<&WideRange> = rows.iter().chain(&cols).collect();
        assert!(all.iter().any(|r| r.lo < 0.0 && r.hi > 0.0));
        assert!(all.iter().any(|r| r.lo > 0.0 || r.hi < 0.0));
    }

    #[test]
    fn qr_small_cases() {
        let one = MatrixDD::from_f64(1, 1, &[3.5]).unwrap();
        assert_eq!(householder_qr_dd(&one).unwrap(), MatrixDD::identity(1));
        let rot = MatrixDD::from_f64(2, 2, &[0.6, -0.8, 0.8, 0.6]).unwrap();
        let q = householder_qr_dd(&rot).unwrap();
        assert!(orthogonality_residual(&q) <= pow2(-90));
        assert!(matches!(householder_qr_dd(&MatrixDD::zeros(2, 2)), Err(Error::Breakdown(0))));
    }

    #[test]
    fn qr_random_is_orthogonal() {
        let m = gen_uniform(&GenSpec::uniform(40, 40, 40, -1.0, 1.0, 9)).unwrap();
        let q = householder_qr_dd(&m).unwrap();
        assert!(orthogonality_residual(&q) <= pow2(-90));
    }

    #[test]
    fn dd_sqrt_and_div_are_accurate() {
        let two = DD::from_raw(2.0, 0.0);
        let s = dd_sqrt(two);
        let sq = Dyadic::from_dd(s) * Dyadic::from_dd(s);
        assert!((&sq - &Dyadic::from_f64(2.0)).ratio_to(&Dyadic::from_f64(2.0)) < pow2(-100));
        let q = dd_div(DD::ONE, DD::from_raw(3.0, 0.0));
        let back = Dyadic::from_dd(q) * Dyadic::from_f64(3.0);
        assert!((&back - &Dyadic::one()).ratio_to(&Dyadic::one()) < pow2(-100));
    }

    #[test]
    fn illcond_structure() {
        let n = 24;
        let t = 1e-19;
        let (a, b, c) = gen_illcond(&GenSpec::illcond(n, t, 1)).unwrap();
        for j in 0..n {
            let ones = (0..n).filter(|&i| c.get(i, j) == DD::ONE).count();
            assert_eq!(ones, 1, "column {j}");
            for i in 0..n {
                let v = c.get(i, j).hi().abs();
                assert!(v == 1.0 || (v > t && v < 10.0 * t));
            }
        }
        let exact = exact_gemm(&a, &b).unwrap();
        let slack = 10.0 * t + pow2(-90) * n as f64;
        for i in 0..n {
            for j in 0..n {
                if c.get(i, j) != DD::ONE {
                    assert!(exact.get(i, j).abs().to_f64() < slack);
                }
            }
        }
        assert!(gen_illcond(&GenSpec { k: 5, ..GenSpec::illcond(4, t, 1) }).is_err());
        assert!(gen_illcond(&GenSpec::illcond(4, 0.0, 1)).is_err());
    }
}
