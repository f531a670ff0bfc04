//! Portable Goto-style blocked binary64 GEMM.
//!
//! Five loops around an `mR x nR` microkernel: `nC` column panels of `B`,
//! rank-`kC` updates, `mC` row blocks of `A`, then `nR` and `mR` strips.
//! Within a rank-`kC` update every output element is accumulated from zero,
//! left to right over `p`, and only then scaled and added to `C`. The result
//! is therefore independent of `mC`, `nC`, `mR` and `nR`.

use crate::error::{Error, Result};

/// Cache and register blocking sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockingParams {
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
    pub mr: usize,
    pub nr: usize,
}

impl Default for BlockingParams {
    fn default() -> Self {
        BlockingParams { mc: 256, nc: 4096, kc: 256, mr: 4, nr: 4 }
    }
}

impl BlockingParams {
    pub fn with_kc(kc: usize) -> Self {
        BlockingParams { kc, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self;
        if p.mc == 0 || p.nc == 0 || p.kc == 0 || p.mr == 0 || p.nr == 0 {
            return Err(Error::InvalidBlocking(format!("zero block size in {p:?}")));
        }
        if p.mc % p.mr != 0 || p.nc % p.nr != 0 {
            return Err(Error::InvalidBlocking(format!(
                "mC={} must be a multiple of mR={} and nC={} of nR={}",
                p.mc, p.mr, p.nc, p.nr
            )));
        }
        Ok(())
    }
}

/// Read-only strided view of a binary64 matrix.
#[derive(Clone, Copy, Debug)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a> MatRef<'a> {
    /// Row-major `rows x cols`.
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        MatRef::strided(data, rows, cols, cols, 1)
    }

    /// Element `(i, j)` lives at `data[i * rs + j * cs]`.
    pub fn strided(data: &'a [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        if rows > 0 && cols > 0 {
            assert!((rows - 1) * rs + (cols - 1) * cs < data.len(), "view exceeds buffer");
        }
        MatRef { data, rows, cols, rs, cs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.rs + j * self.cs]
    }

    /// Sub-view starting at `(i, j)`.
    pub fn sub(&self, i: usize, j: usize, rows: usize, cols: usize) -> MatRef<'a> {
        assert!(i + rows <= self.rows && j + cols <= self.cols);
        let off = if rows > 0 && cols > 0 { i * self.rs + j * self.cs } else { 0 };
        MatRef { data: &self.data[off..], rows, cols, rs: self.rs, cs: self.cs }
    }
}

/// Mutable row-major view with a leading dimension.
#[derive(Debug)]
pub struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    ld: usize,
}

impl<'a> MatMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        MatMut::with_ld(data, rows, cols, cols)
    }

    pub fn with_ld(data: &'a mut [f64], rows: usize, cols: usize, ld: usize) -> Self {
        if rows > 0 && cols > 0 {
            assert!((rows - 1) * ld + cols <= data.len(), "view exceeds buffer");
        }
        MatMut { data, rows, cols, ld }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ld + j]
    }
}

/// A panel packed into contiguous micro-panels of width `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedPanel {
    pub data: Vec<f64>,
    /// Extent along the strip direction (rows of A, columns of B).
    pub len: usize,
    /// Depth of the panel.
    pub k: usize,
    /// Micro-panel width (`mR` or `nR`).
    pub r: usize,
}

/// Packs `a` (`m x k`) into `mR`-row strips, each stored column by column.
/// The last strip is zero-padded.
pub fn pack_a(a: MatRef<'_>, mr: usize) -> PackedPanel {
    let mut data = Vec::new();
    pack_a_into(a, mr, &mut data);
    PackedPanel { data, len: a.rows, k: a.cols, r: mr }
}

pub(crate) fn pack_a_into(a: MatRef<'_>, mr: usize, out: &mut Vec<f64>) {
    let (m, k) = (a.rows, a.cols);
    let strips = m.div_ceil(mr);
    out.clear();
    out.resize(strips * mr * k, 0.0);
    for s in 0..strips {
        let base = s * mr * k;
        let rows = mr.min(m - s * mr);
        for p in 0..k {
            for i in 0..rows {
                out[base + p * mr + i] = a.get(s * mr + i, p);
            }
        }
    }
}

/// Packs `b` (`k x n`) into `nR`-column strips, each stored row by row.
pub fn pack_b(b: MatRef<'_>, nr: usize) -> PackedPanel {
    let mut data = Vec::new();
    pack_b_into(b, nr, &mut data);
    PackedPanel { data, len: b.cols, k: b.rows, r: nr }
}

pub(crate) fn pack_b_into(b: MatRef<'_>, nr: usize, out: &mut Vec<f64>) {
    let (k, n) = (b.rows, b.cols);
    let strips = n.div_ceil(nr);
    out.clear();
    out.resize(strips * nr * k, 0.0);
    for s in 0..strips {
        let base = s * nr * k;
        let cols = nr.min(n - s * nr);
        for p in 0..k {
            for j in 0..cols {
                out[base + p * nr + j] = b.get(p, s * nr + j);
            }
        }
    }
}

/// Row-major copy of a panel packed by [`pack_a`].
pub fn unpack_a(p: &PackedPanel) -> Vec<f64> {
    let mut out = vec![0.0; p.len * p.k];
    for i in 0..p.len {
        let (s, ii) = (i / p.r, i % p.r);
        for q in 0..p.k {
            out[i * p.k + q] = p.data[s * p.r * p.k + q * p.r + ii];
        }
    }
    out
}

/// Row-major copy of a panel packed by [`pack_b`].
pub fn unpack_b(p: &PackedPanel) -> Vec<f64> {
    let mut out = vec![0.0; p.k * p.len];
    for j in 0..p.len {
        let (s, jj) = (j / p.r, j % p.r);
        for q in 0..p.k {
            out[q * p.len + j] = p.data[s * p.r * p.k + q * p.r + jj];
        }
    }
    out
}

/// `C[0..m_eff, 0..n_eff] += scale * (A_strip * B_strip)`.
///
/// `a` is an `mr x k` strip stored column by column, `b` a `k x nr` strip
/// stored row by row, `c` row-major with leading dimension `ldc`. Products
/// are summed from zero in increasing `p` without fused multiply-adds.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn microkernel(
    mr: usize,
    nr: usize,
    k: usize,
    a: &[f64],
    b: &[f64],
    scale: f64,
    c: &mut [f64],
    ldc: usize,
    m_eff: usize,
    n_eff: usize,
) {
    if mr == 4 && nr == 4 {
        kernel_4x4(k, a, b, scale, c, ldc, m_eff, n_eff);
        return;
    }
    let mut acc = vec![0.0; mr * nr];
    for p in 0..k {
        let ap = &a[p * mr..(p + 1) * mr];
        let bp = &b[p * nr..(p + 1) * nr];
        for i in 0..mr {
            for j in 0..nr {
                acc[i * nr + j] += ap[i] * bp[j];
            }
        }
    }
    for i in 0..m_eff {
        for j in 0..n_eff {
            c[i * ldc + j] += scale * acc[i * nr + j];
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn kernel_4x4(
    k: usize,
    a: &[f64],
    b: &[f64],
    scale: f64,
    c: &mut [f64],
    ldc: usize,
    m_eff: usize,
    n_eff: usize,
) {
    let a = &a[..4 * k];
    let b = &b[..4 * k];
    let mut acc = [[0.0f64; 4]; 4];
    for (ap, bp) in a.chunks_exact(4).zip(b.chunks_exact(4)) {
        for i in 0..4 {
            for j in 0..4 {
                acc[i][j] += ap[i] * bp[j];
            }
        }
    }
    if m_eff == 4 && n_eff == 4 {
        for i in 0..4 {
            let row = &mut c[i * ldc..i * ldc + 4];
            for j in 0..4 {
                row[j] += scale * acc[i][j];
            }
        }
    } else {
        for i in 0..m_eff {
            for j in 0..n_eff {
                c[i * ldc + j] += scale * acc[i][j];
            }
        }
    }
}

/// Floating-point operation count `2mnk` of one binary64 GEMM.
pub fn flop_count(m: usize, n: usize, k: usize) -> u64 {
    2 * m as u64 * n as u64 * k as u64
}

fn check_shapes(a: &MatRef<'_>, b: &MatRef<'_>, c: &MatMut<'_>) -> Result<()> {
    if a.cols != b.rows || a.rows != c.rows || b.cols != c.cols {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, B {}x{}, C {}x{}",
            a.rows, a.cols, b.rows, b.cols, c.rows, c.cols
        )));
    }
    Ok(())
}

/// `C += A * B`.
pub fn dgemm(a: MatRef<'_>, b: MatRef<'_>, c: &mut MatMut<'_>, params: &BlockingParams) -> Result<()> {
    dgemm_scaled(a, b, c, 1.0, params)
}

/// `C += scale * (A * B)` for a power-of-two `scale`, staged as rank-`kC`
/// updates.
pub fn dgemm_scaled(
    a: MatRef<'_>,
    b: MatRef<'_>,
    c: &mut MatMut<'_>,
    scale: f64,
    params: &BlockingParams,
) -> Result<()> {
    check_shapes(&a, &b, c)?;
    params.validate()?;
    let (m, n, k) = (a.rows, b.cols, a.cols);
    let BlockingParams { mc, nc, kc, mr, nr } = *params;
    let mut abuf = Vec::new();
    let mut bbuf = Vec::new();
    let ld = c.ld;
    for jc in (0..n).step_by(nc) {
        let nb = nc.min(n - jc);
        for pc in (0..k).step_by(kc) {
            let kb = kc.min(k - pc);
            pack_b_into(b.sub(pc, jc, kb, nb), nr, &mut bbuf);
            for ic in (0..m).step_by(mc) {
                let mb = mc.min(m - ic);
                pack_a_into(a.sub(ic, pc, mb, kb), mr, &mut abuf);
                for jr in (0..nb).step_by(nr) {
                    let bstrip = &bbuf[(jr / nr) * nr * kb..];
                    let n_eff = nr.min(nb - jr);
                    for ir in (0..mb).step_by(mr) {
                        let astrip = &abuf[(ir / mr) * mr * kb..];
                        let m_eff = mr.min(mb - ir);
                        let off = (ic + ir) * ld + jc + jr;
                        microkernel(mr, nr, kb, astrip, bstrip, scale, &mut c.data[off..], ld, m_eff, n_eff);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reference loop with the same per-element operation order as [`dgemm_scaled`].
pub fn naive_blocked(a: MatRef<'_>, b: MatRef<'_>, c: &mut MatMut<'_>, scale: f64, kc: usize) -> Result<()> {
    check_shapes(&a, &b, c)?;
    let (m, n, k) = (a.rows, b.cols, a.cols);
    for pc in (0..k).step_by(kc.max(1)) {
        let kb = kc.min(k - pc);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for p in pc..pc + kb {
                    acc += a.get(i, p) * b.get(p, j);
                }
                c.data[i * c.ld + j] += scale * acc;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn pack_a_single_strip_is_column_major() {
        let a: Vec<f64> = (0..16).map(|x| x as f64).collect();
        let p = pack_a(MatRef::new(&a, 4, 4), 4);
        let expected: Vec<f64> = (0..16).map(|x| ((x % 4) * 4 + x / 4) as f64).collect();
        assert_eq!(p.data, expected);
        let p = pack_b(MatRef::new(&a, 4, 4), 4);
        assert_eq!(p.data, a);
    }

    #[test]
    fn pack_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(r, c) in &[(1, 1), (5, 3), (8, 8), (13, 7)] {
            let x = random(&mut rng, r * c);
            assert_eq!(unpack_a(&pack_a(MatRef::new(&x, r, c), 4)), x);
            assert_eq!(unpack_b(&pack_b(MatRef::new(&x, r, c), 4)), x);
            assert_eq!(unpack_a(&pack_a(MatRef::new(&x, r, c), 3)), x);
        }
    }

    #[test]
    fn microkernel_examples() {
        let a = [0.0; 8];
        let b = [1.0; 8];
        let mut c = [2.0; 16];
        microkernel(4, 4, 2, &a, &b, 1.0, &mut c, 4, 4, 4);
        assert_eq!(c, [2.0; 16]);

        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut c = [0.0; 16];
        microkernel(4, 4, 1, &a, &b, 1.0, &mut c, 4, 4, 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c[i * 4 + j], a[i] * b[j]);
            }
        }
    }

    #[test]
    fn microkernel_matches_naive_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(mr, nr) in &[(4, 4), (2, 3), (6, 2)] {
            let k = 37;
            let a = random(&mut rng, mr * k);
            let b = random(&mut rng, k * nr);
            let c0 = random(&mut rng, mr * nr);
            let mut c = c0.clone();
            microkernel(mr, nr, k, &a, &b, 0.25, &mut c, nr, mr, nr);
            for i in 0..mr {
                for j in 0..nr {
                    let mut acc = 0.0;
                    for p in 0..k {
                        acc += a[p * mr + i] * b[p * nr + j];
                    }
                    assert_eq!(c[i * nr + j].to_bits(), (c0[i * nr + j] + 0.25 * acc).to_bits());
                }
            }
        }
    }

    #[test]
    fn identity_times_b() {
        let n = 7;
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random(&mut rng, n * n);
        let mut c = vec![0.0; n * n];
        dgemm(MatRef::new(&eye, n, n), MatRef::new(&b, n, n), &mut MatMut::new(&mut c, n, n), &BlockingParams::default()).unwrap();
        assert_eq!(c, b);
    }

    fn check_against_naive(m: usize, n: usize, k: usize, params: BlockingParams, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&mut rng, m * k);
        let b = random(&mut rng, k * n);
        let c0 = random(&mut rng, m * n);
        let mut c1 = c0.clone();
        let mut c2 = c0.clone();
        dgemm(MatRef::new(&a, m, k), MatRef::new(&b, k, n), &mut MatMut::new(&mut c1, m, n), &params).unwrap();
        naive_blocked(MatRef::new(&a, m, k), MatRef::new(&b, k, n), &mut MatMut::new(&mut c2, m, n), 1.0, params.kc).unwrap();
        assert!(c1.iter().zip(&c2).all(|(x, y)| x.to_bits() == y.to_bits()), "{m}x{n}x{k} {params:?}");
    }

    #[test]
    fn small_shapes_match_naive() {
        check_against_naive(3, 3, 3, BlockingParams::default(), 4);
        check_against_naive(9, 5, 600, BlockingParams::default(), 5);
        check_against_naive(17, 23, 19, BlockingParams { mc: 8, nc: 12, kc: 5, mr: 4, nr: 4 }, 6);
        check_against_naive(10, 11, 12, BlockingParams { mc: 6, nc: 6, kc: 4, mr: 3, nr: 2 }, 7);
    }

    #[test]
    fn large_product_close_to_exact() {
        let n = 512;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random(&mut rng, n * n);
        let b = random(&mut rng, n * n);
        let mut c = vec![0.0; n * n];
        dgemm(MatRef::new(&a, n, n), MatRef::new(&b, n, n), &mut MatMut::new(&mut c, n, n), &BlockingParams::default()).unwrap();
        for &(i, j) in &[(0, 0), (17, 300), (511, 511), (200, 3)] {
            let mut abs = 0.0;
            let mut acc = crate::exact::ExactAccumulator::new();
            for p in 0..n {
                acc.add_product(a[i * n + p], b[p * n + j], 0);
                abs += (a[i * n + p] * b[p * n + j]).abs();
            }
            let exact = acc.value();
            let err = (&crate::exact::Dyadic::from_f64(c[i * n + j]) - &exact).abs().to_f64();
            assert!(err <= n as f64 * 2f64.powi(-53) * abs, "({i},{j})");
        }
    }

    #[test]
    fn strided_views_pack_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (r, c) = (6, 5);
        let x = random(&mut rng, r * c);
        // column-major copy of x
        let mut t = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                t[j * r + i] = x[i * c + j];
            }
        }
        let row_major = MatRef::new(&x, r, c);
        let col_major = MatRef::strided(&t, r, c, 1, r);
        assert_eq!(pack_a(row_major, 4), pack_a(col_major, 4));
        assert_eq!(pack_b(row_major, 4), pack_b(col_major, 4));
    }

    #[test]
    fn rejects_bad_shapes_and_params() {
        let a = vec![0.0; 6];
        let mut c = vec![0.0; 4];
        let r = dgemm(MatRef::new(&a, 2, 3), MatRef::new(&a, 2, 3), &mut MatMut::new(&mut c, 2, 2), &BlockingParams::default());
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let bad = BlockingParams { mc: 6, ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(flop_count(2, 3, 4), 48);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn blocking_invariance(m in 1usize..40, n in 1usize..40, k in 1usize..80, kc in 1usize..40, seed in 0u64..1000) {
            let params = BlockingParams { mc: 8, nc: 8, kc, mr: 4, nr: 4 };
            check_against_naive(m, n, k, params, seed);
            check_against_naive(m, n, k, BlockingParams { mc: 256, nc: 4096, kc, mr: 4, nr: 4 }, seed);
        }

        #[test]
        fn strided_pack_matches(r in 1usize..12, c in 1usize..12, seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(&mut rng, r * c);
            let mut padded = vec![0.0; r * (c + 3)];
            for i in 0..r {
                padded[i * (c + 3)..i * (c + 3) + c].copy_from_slice(&x[i * c..(i + 1) * c]);
            }
            let a = MatRef::new(&x, r, c);
            let b = MatRef::strided(&padded, r, c, c + 3, 1);
            prop_assert_eq!(pack_a(a, 4), pack_a(b, 4));
            prop_assert_eq!(pack_b(a, 4), pack_b(b, 4));
        }
    }
}
