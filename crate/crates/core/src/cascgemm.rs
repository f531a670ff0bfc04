//! Double-double GEMM from ten binary64 GEMMs over cascaded splits.
//!
//! With `A = S (A0 + s1 A1 + s2 A2 + s3 A3)` and `B` split likewise into
//! `B0..B3` (plus the derived `B4..B6`), the product is gathered in four bins:
//!
//! ```text
//! bin0  = A0 B0
//! bin1  = A0 B1 + A1 B0
//! bin2  = A0 B2 + 2^(c1-c0) A1 B1 + A2 B0
//! bin36 = A0 B3 + 2^(c2-c0) A1 B4 + 2^(c2-c0) A2 B5 + A3 B6
//! ```
//!
//! Bins 0 to 2 are exact fixed-point sums. The bins are merged in
//! double-double arithmetic from bin36 upward, rescaled by the row and column
//! powers of two and added to `C`.
//!
//! Two interchangeable paths are provided. The simple path splits whole
//! panels and calls [`dgemm_scaled`](crate::dgemm::dgemm_scaled) ten times per
//! panel pair. The fused path splits while packing and keeps the bins for one
//! `mC x nR` strip, merging them right after the loop over `mR` strips.
//! Both perform the same binary64 operations per output element, so their
//! bins and results agree bit for bit.

use std::str::FromStr;
use std::sync::OnceLock;

use crate::cascade::{
    column_scales, inverse_scale, row_scale, select_widths, split_a_block, split_b_block,
    split_b_element, BCombine, SplitWidths, Splitter, MAX_DEPTH,
};
use crate::dd::{dd_add, dd_add_f64, dd_mul, DD};
use crate::dgemm::{dgemm, dgemm_scaled, microkernel, BlockingParams, MatMut, MatRef};
use crate::error::{Error, Result};
use crate::fp::pow2;
use crate::matrix::MatrixDD;

/// Bin index of the merged bins 3 to 6.
pub const BIN36: usize = 3;

/// The ten products as `(A split, B split, bin)`.
pub const PRODUCTS: [(usize, usize, usize); 10] = [
    (0, 0, 0),
    (0, 1, 1),
    (1, 0, 1),
    (0, 2, 2),
    (1, 1, 2),
    (2, 0, 2),
    (0, 3, BIN36),
    (1, 4, BIN36),
    (2, 5, BIN36),
    (3, 6, BIN36),
];

/// Environment variable for deliberate fault injection in self-tests.
pub const FAULT_ENV: &str = "DDCASCADE_FAULT";

fn fault_bin2_align() -> bool {
    static FAULT: OnceLock<bool> = OnceLock::new();
    *FAULT.get_or_init(|| std::env::var(FAULT_ENV).is_ok_and(|v| v == "bin2-align"))
}

/// Power-of-two factor aligning each product to its bin's reference scale.
pub fn alignment_factors(w: &SplitWidths) -> [f64; 10] {
    let f11 = pow2(w.c1 as i32 - w.c0 as i32);
    let f2 = pow2(w.c2 as i32 - w.c0 as i32);
    let mut f = [1.0, 1.0, 1.0, 1.0, f11, 1.0, 1.0, f2, f2, 1.0];
    if fault_bin2_align() {
        f[4] = 1.0;
    }
    f
}

/// The exact alignment factors as binary exponents (never fault-injected).
pub fn alignment_exponents(w: &SplitWidths) -> [i32; 10] {
    let e11 = w.c1 as i32 - w.c0 as i32;
    let e2 = w.c2 as i32 - w.c0 as i32;
    [0, 0, 0, 0, e11, 0, 0, e2, e2, 0]
}

/// Four accumulation surfaces for an `rows x cols` output block.
#[derive(Clone, Debug, PartialEq)]
pub struct BinAccumulator {
    pub rows: usize,
    pub cols: usize,
    /// `bin0`, `bin1`, `bin2`, `bin36`, each row-major.
    pub bins: [Vec<f64>; 4],
}

impl BinAccumulator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinAccumulator { rows, cols, bins: std::array::from_fn(|_| vec![0.0; rows * cols]) }
    }

    pub fn get(&self, i: usize, j: usize) -> [f64; 4] {
        std::array::from_fn(|b| self.bins[b][i * self.cols + j])
    }
}

/// `2^(er+ec) * (bin0 + bin1 2^-D0 + bin2 2^-D1 + bin36 2^-D2)`, accumulated
/// in double-double from bin36 up to bin0.
#[inline]
pub fn combine_element(bins: [f64; 4], er: i32, ec: i32, w: &SplitWidths) -> Result<DD> {
    let t = DD::from_raw(bins[3] * pow2(-(w.d2 as i32)), 0.0);
    let t = dd_add_f64(t, bins[2] * pow2(-(w.d1 as i32)));
    let t = dd_add_f64(t, bins[1] * pow2(-(w.d0 as i32)));
    let t = dd_add_f64(t, bins[0]);
    t.scale_pow2_lossy(er as i64 + ec as i64)
}

/// Merges a whole accumulator into double-double values.
pub fn combine_bins(
    bins: &BinAccumulator,
    row_exps: &[i32],
    col_exps: &[i32],
    w: &SplitWidths,
) -> Result<MatrixDD> {
    let mut out = MatrixDD::zeros(bins.rows, bins.cols);
    for i in 0..bins.rows {
        for j in 0..bins.cols {
            out.set(i, j, combine_element(bins.get(i, j), row_exps[i], col_exps[j], w)?);
        }
    }
    Ok(out)
}

/// Entries whose bin 0 was exactly zero in at least one panel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CancellationReport {
    pub rows: usize,
    pub cols: usize,
    /// Row-major flags (union over panels).
    pub flagged: Vec<bool>,
    /// Number of zero bin-0 entries in each rank-`kC` panel.
    pub panel_counts: Vec<usize>,
    pub panels: usize,
}

impl CancellationReport {
    fn new(rows: usize, cols: usize, panels: usize) -> Self {
        CancellationReport {
            rows,
            cols,
            flagged: vec![false; rows * cols],
            panel_counts: vec![0; panels],
            panels,
        }
    }

    pub fn is_flagged(&self, i: usize, j: usize) -> bool {
        self.flagged[i * self.cols + j]
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }

    pub fn flagged_indices(&self) -> Vec<(usize, usize)> {
        (0..self.rows * self.cols)
            .filter(|&idx| self.flagged[idx])
            .map(|idx| (idx / self.cols, idx % self.cols))
            .collect()
    }
}

/// Work counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GemmStats {
    /// Rank-`kC` panels of the inner dimension.
    pub panels: u64,
    /// Binary64 product evaluations: whole-panel GEMM calls on the simple
    /// path, microkernel calls on the fused path.
    pub products: u64,
    /// Operand pairs those products ran over: panel pairs on the simple path,
    /// micro-panel pairs on the fused path.
    pub pairs: u64,
}

impl GemmStats {
    fn merge(&mut self, other: &GemmStats) {
        self.products += other.products;
        self.pairs += other.pairs;
    }

    /// Products per operand pair; 10 for both paths.
    pub fn products_per_pair(&self) -> f64 {
        self.products as f64 / self.pairs as f64
    }
}

/// Which cascaded implementation to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Path {
    Simple,
    Fused,
}

/// Settings for [`cascaded_gemm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CascadeOptions {
    pub params: BlockingParams,
    /// Column partitions run on separate threads (1 runs inline).
    pub threads: usize,
    /// Keep every panel's bins in the outcome.
    pub record_bins: bool,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions { params: BlockingParams::default(), threads: 1, record_bins: false }
    }
}

/// Report, counters and (optionally) bins of one cascaded GEMM.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeOutcome {
    pub report: CancellationReport,
    pub stats: GemmStats,
    /// Per-panel `m x n` bins plus their row and column exponents, if recorded.
    pub bins: Vec<PanelBins>,
}

/// Bins of one rank-`kC` panel.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelBins {
    pub widths: SplitWidths,
    pub bins: BinAccumulator,
    pub row_exps: Vec<i32>,
    pub col_exps: Vec<i32>,
}

fn check_shapes(a: &MatrixDD, b: &MatrixDD, c: &MatrixDD) -> Result<()> {
    if a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, B {}x{}, C {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            c.rows(),
            c.cols()
        )));
    }
    Ok(())
}

fn check_params(p: &BlockingParams, fused: bool) -> Result<()> {
    p.validate()?;
    if p.kc > MAX_DEPTH {
        return Err(Error::InvalidBlocking(format!("kC={} exceeds {MAX_DEPTH}", p.kc)));
    }
    if fused && (p.mc / 4 < p.mr || p.nc / 4 < p.nr || (p.mc / 4) % p.mr != 0 || (p.nc / 4) % p.nr != 0) {
        return Err(Error::InvalidBlocking(format!(
            "fused path needs mC/4 and nC/4 to be multiples of mR and nR: {p:?}"
        )));
    }
    Ok(())
}

/// Cascaded `x^T y` for `len <= w.k`, flagged when bin 0 is zero.
pub fn cascaded_dot(x: &[DD], y: &[DD], w: &SplitWidths) -> Result<(DD, bool)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("lengths {} and {}", x.len(), y.len())));
    }
    let k = x.len();
    if k > w.k {
        return Err(Error::DepthOutOfRange { k, max: w.k });
    }
    let sp = Splitter::new(w);
    let comb = BCombine::new(w);
    let er = row_scale(x);
    let ec = row_scale(y);
    let (a1, a2) = inverse_scale(er);
    let (b1, b2) = inverse_scale(ec);
    let xs: Vec<[f64; 4]> = x.iter().map(|v| sp.split(v.hi() * a1 * a2, v.lo() * a1 * a2)).collect();
    let ys: Vec<[f64; 7]> =
        y.iter().map(|v| split_b_element(&sp, &comb, v.hi() * b1 * b2, v.lo() * b1 * b2)).collect();
    let factors = alignment_factors(w);
    let mut bins = [0.0; 4];
    for (t, &(sa, sb, bin)) in PRODUCTS.iter().enumerate() {
        let mut acc = 0.0;
        for p in 0..k {
            acc += xs[p][sa] * ys[p][sb];
        }
        bins[bin] += factors[t] * acc;
    }
    let value = dd_add(DD::ZERO, combine_element(bins, er, ec, w)?);
    Ok((value, bins[0] == 0.0))
}

/// Splits columns `0..n` into at most `threads` blocks aligned to `nr`.
fn partitions(n: usize, threads: usize, nr: usize) -> Vec<(usize, usize)> {
    let strips = n.div_ceil(nr);
    let parts = threads.max(1).min(strips.max(1));
    let mut out = Vec::new();
    let mut start = 0;
    for t in 0..parts {
        let count = strips / parts + usize::from(t < strips % parts);
        let end = ((start / nr + count) * nr).min(n);
        if end > start {
            out.push((start, end - start));
        }
        start = end;
    }
    out
}

struct PartOutcome {
    c: MatrixDD,
    report: CancellationReport,
    stats: GemmStats,
    bins: Vec<PanelBins>,
}

/// Runs either path on column block `c0..c0+np` with its own copy of that
/// block of `C`.
fn run_part(a: &MatrixDD, b: &MatrixDD, c: MatrixDD, c0: usize, path: Path, opts: &CascadeOptions) -> Result<PartOutcome> {
    match path {
        Path::Simple => simple_part(a, b, c, c0, opts),
        Path::Fused => fused_part(a, b, c, c0, opts),
    }
}

/// General entry point: `C += A * B` by the chosen path.
pub fn cascaded_gemm(a: &MatrixDD, b: &MatrixDD, c: &mut MatrixDD, path: Path, opts: &CascadeOptions) -> Result<CascadeOutcome> {
    check_shapes(a, b, c)?;
    check_params(&opts.params, path == Path::Fused)?;
    let (m, n, k) = (a.rows(), b.cols(), a.cols());
    let panels = k.div_ceil(opts.params.kc);
    let parts = partitions(n, opts.threads, opts.params.nr);
    let inputs: Vec<(usize, MatrixDD)> = parts.iter().map(|&(c0, np)| (c0, c.block(0, c0, m, np))).collect();
    let results: Vec<Result<PartOutcome>> = if inputs.len() <= 1 {
        inputs.into_iter().map(|(c0, cb)| run_part(a, b, cb, c0, path, opts)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = inputs
                .into_iter()
                .map(|(c0, cb)| s.spawn(move || run_part(a, b, cb, c0, path, opts)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("GEMM worker panicked")).collect()
        })
    };

    let mut report = CancellationReport::new(m, n, panels);
    let mut stats = GemmStats { panels: panels as u64, ..Default::default() };
    let mut bins: Vec<PanelBins> = Vec::new();
    for (&(c0, np), res) in parts.iter().zip(results) {
        let part = res?;
        for i in 0..m {
            for j in 0..np {
                c.set(i, c0 + j, part.c.get(i, j));
                report.flagged[i * n + c0 + j] = part.report.is_flagged(i, j);
            }
        }
        for (total, count) in report.panel_counts.iter_mut().zip(&part.report.panel_counts) {
            *total += count;
        }
        stats.merge(&part.stats);
        if opts.record_bins {
            if bins.is_empty() {
                bins = part
                    .bins
                    .iter()
                    .map(|pb| PanelBins {
                        widths: pb.widths,
                        bins: BinAccumulator::zeros(m, n),
                        row_exps: pb.row_exps.clone(),
                        col_exps: vec![0; n],
                    })
                    .collect();
            }
            for (whole, pb) in bins.iter_mut().zip(&part.bins) {
                for j in 0..np {
                    whole.col_exps[c0 + j] = pb.col_exps[j];
                    for i in 0..m {
                        for bi in 0..4 {
                            whole.bins.bins[bi][i * n + c0 + j] = pb.bins.bins[bi][i * np + j];
                        }
                    }
                }
            }
        }
    }
    Ok(CascadeOutcome { report, stats, bins })
}

/// Simple path: `C += A * B` with whole-panel splits and ten
/// [`dgemm_scaled`] calls per rank-`kC` panel pair.
pub fn cascaded_gemm_simple(a: &MatrixDD, b: &MatrixDD, c: &mut MatrixDD, kc: usize) -> Result<CascadeOutcome> {
    let opts = CascadeOptions { params: BlockingParams::with_kc(kc), ..Default::default() };
    cascaded_gemm(a, b, c, Path::Simple, &opts)
}

/// Fused path: `C += A * B` with splitting folded into packing.
pub fn cascaded_gemm_fused(a: &MatrixDD, b: &MatrixDD, c: &mut MatrixDD, params: &BlockingParams) -> Result<CascadeOutcome> {
    let opts = CascadeOptions { params: *params, ..Default::default() };
    cascaded_gemm(a, b, c, Path::Fused, &opts)
}

fn simple_part(a: &MatrixDD, b: &MatrixDD, mut c: MatrixDD, c0: usize, opts: &CascadeOptions) -> Result<PartOutcome> {
    let (m, n, k) = (a.rows(), c.cols(), a.cols());
    let kc = opts.params.kc;
    let panels = k.div_ceil(kc);
    let mut report = CancellationReport::new(m, n, panels);
    let mut stats = GemmStats::default();
    let mut recorded = Vec::new();
    let params = opts.params;
    for (panel, pc) in (0..k).step_by(kc).enumerate() {
        let kb = kc.min(k - pc);
        let w = select_widths(kb)?;
        let sa = split_a_block(a, 0, m, pc, kb, &w)?;
        let sb = split_b_block(b, pc, kb, c0, n, &w)?;
        let factors = alignment_factors(&w);
        let mut acc = BinAccumulator::zeros(m, n);
        for (t, &(ia, ib, bin)) in PRODUCTS.iter().enumerate() {
            dgemm_scaled(
                MatRef::new(&sa.splits[ia], m, kb),
                MatRef::new(&sb.splits[ib], kb, n),
                &mut MatMut::new(&mut acc.bins[bin], m, n),
                factors[t],
                &params,
            )?;
            stats.products += 1;
        }
        stats.pairs += 1;
        for i in 0..m {
            for j in 0..n {
                let bins = acc.get(i, j);
                if bins[0] == 0.0 {
                    report.flagged[i * n + j] = true;
                    report.panel_counts[panel] += 1;
                }
                let v = combine_element(bins, sa.scale.exponents[i], sb.scale.exponents[j], &w)?;
                c.set(i, j, dd_add(c.get(i, j), v));
            }
        }
        if opts.record_bins {
            recorded.push(PanelBins {
                widths: w,
                bins: acc,
                row_exps: sa.scale.exponents,
                col_exps: sb.scale.exponents,
            });
        }
    }
    Ok(PartOutcome { c, report, stats, bins: recorded })
}

fn fused_part(a: &MatrixDD, b: &MatrixDD, mut c: MatrixDD, c0: usize, opts: &CascadeOptions) -> Result<PartOutcome> {
    let (m, n, k) = (a.rows(), c.cols(), a.cols());
    let BlockingParams { mc, nc, kc, mr, nr } = opts.params;
    // Four A and seven B micro-panels per strip: shrink the cache blocks to match.
    let (mc, nc) = (mc / 4, nc / 4);
    let panels = k.div_ceil(kc);
    let mut report = CancellationReport::new(m, n, panels);
    let mut stats = GemmStats::default();
    let mut recorded: Vec<PanelBins> = Vec::new();
    if opts.record_bins {
        for pc in (0..k).step_by(kc) {
            let kb = kc.min(k - pc);
            recorded.push(PanelBins {
                widths: select_widths(kb)?,
                bins: BinAccumulator::zeros(m, n),
                row_exps: vec![0; m],
                col_exps: vec![0; n],
            });
        }
    }
    let mut apack: Vec<f64> = Vec::new();
    let mut bpack: Vec<f64> = Vec::new();
    let mut tile: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::new());
    for jc in (0..n).step_by(nc) {
        let nb = nc.min(n - jc);
        for (panel, pc) in (0..k).step_by(kc).enumerate() {
            let kb = kc.min(k - pc);
            let w = select_widths(kb)?;
            let sp = Splitter::new(&w);
            let comb = BCombine::new(&w);
            let factors = alignment_factors(&w);
            let col_exps = column_scales(b, pc, kb, c0 + jc, nb);

            // B: per nR strip, seven kb x nR micro-panels stored row by row.
            let bstrips = nb.div_ceil(nr);
            let bstride = 7 * kb * nr;
            bpack.clear();
            bpack.resize(bstrips * bstride, 0.0);
            for j in 0..nb {
                let (s, jj) = (j / nr, j % nr);
                let (f1, f2) = inverse_scale(col_exps[j]);
                for p in 0..kb {
                    let x = b.get(pc + p, c0 + jc + j);
                    let parts = split_b_element(&sp, &comb, x.hi() * f1 * f2, x.lo() * f1 * f2);
                    for (t, v) in parts.iter().enumerate() {
                        bpack[s * bstride + t * kb * nr + p * nr + jj] = *v;
                    }
                }
            }

            for ic in (0..m).step_by(mc) {
                let mb = mc.min(m - ic);
                let row_exps: Vec<i32> = (ic..ic + mb).map(|i| row_scale(&a.row(i)[pc..pc + kb])).collect();

                // A: per mR strip, four mR x kb micro-panels stored column by column.
                let astrips = mb.div_ceil(mr);
                let astride = 4 * kb * mr;
                apack.clear();
                apack.resize(astrips * astride, 0.0);
                for i in 0..mb {
                    let (s, ii) = (i / mr, i % mr);
                    let (f1, f2) = inverse_scale(row_exps[i]);
                    let row = &a.row(ic + i)[pc..pc + kb];
                    for (p, x) in row.iter().enumerate() {
                        let parts = sp.split(x.hi() * f1 * f2, x.lo() * f1 * f2);
                        for (t, v) in parts.iter().enumerate() {
                            apack[s * astride + t * kb * mr + p * mr + ii] = *v;
                        }
                    }
                }

                for jr in (0..nb).step_by(nr) {
                    let n_eff = nr.min(nb - jr);
                    let bstrip = &bpack[(jr / nr) * bstride..];
                    for t in &mut tile {
                        t.clear();
                        t.resize(astrips * mr * nr, 0.0);
                    }
                    for ir in (0..mb).step_by(mr) {
                        let m_eff = mr.min(mb - ir);
                        let astrip = &apack[(ir / mr) * astride..];
                        for (t, &(ia, ib, bin)) in PRODUCTS.iter().enumerate() {
                            microkernel(
                                mr,
                                nr,
                                kb,
                                &astrip[ia * kb * mr..],
                                &bstrip[ib * kb * nr..],
                                factors[t],
                                &mut tile[bin][ir * nr..],
                                nr,
                                m_eff,
                                n_eff,
                            );
                            stats.products += 1;
                        }
                        stats.pairs += 1;
                    }
                    // merge this mC x nR strip of bins into C
                    for i in 0..mb {
                        for j in 0..n_eff {
                            let bins: [f64; 4] = std::array::from_fn(|bi| tile[bi][i * nr + j]);
                            let (gi, gj) = (ic + i, jc + jr + j);
                            if bins[0] == 0.0 {
                                report.flagged[gi * n + gj] = true;
                                report.panel_counts[panel] += 1;
                            }
                            let v = combine_element(bins, row_exps[i], col_exps[jr + j], &w)?;
                            c.set(gi, gj, dd_add(c.get(gi, gj), v));
                            if let Some(rec) = recorded.get_mut(panel) {
                                for (bi, &v) in bins.iter().enumerate() {
                                    rec.bins.bins[bi][gi * n + gj] = v;
                                }
                                rec.row_exps[gi] = row_exps[i];
                                rec.col_exps[gj] = col_exps[jr + j];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(PartOutcome { c, report, stats, bins: recorded })
}

/// `C += A * B` with a plain `i, j, p` triple loop in double-double.
pub fn ddgemm_naive(a: &MatrixDD, b: &MatrixDD, c: &mut MatrixDD) -> Result<()> {
    check_shapes(a, b, c)?;
    let bt = b.transpose();
    let k = a.cols();
    for i in 0..a.rows() {
        let arow = a.row(i);
        for j in 0..b.cols() {
            let bcol = bt.row(j);
            let mut s = c.get(i, j);
            for p in 0..k {
                s = dd_add(s, dd_mul(arow[p], bcol[p]));
            }
            c.set(i, j, s);
        }
    }
    Ok(())
}

/// `A * B` by [`ddgemm_naive`].
pub fn ddgemm_naive_product(a: &MatrixDD, b: &MatrixDD) -> Result<MatrixDD> {
    let mut c = MatrixDD::zeros(a.rows(), b.cols());
    ddgemm_naive(a, b, &mut c)?;
    Ok(c)
}

/// Multiplication methods compared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    CascadedSimple,
    CascadedFused,
    DdNaive,
    /// Plain binary64 GEMM of the high limbs.
    F64,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::CascadedSimple, Method::CascadedFused, Method::DdNaive, Method::F64];

    pub fn name(self) -> &'static str {
        match self {
            Method::CascadedSimple => "cascaded-simple",
            Method::CascadedFused => "cascaded-fused",
            Method::DdNaive => "dd-naive",
            Method::F64 => "f64",
        }
    }

    pub fn is_cascaded(self) -> bool {
        matches!(self, Method::CascadedSimple | Method::CascadedFused)
    }

    /// Binary64 flops per multiply: ten GEMMs for the cascaded methods.
    pub fn flops(self, m: usize, n: usize, k: usize) -> u64 {
        let base = crate::dgemm::flop_count(m, n, k);
        if self.is_cascaded() {
            10 * base
        } else {
            base
        }
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected cascaded-simple, cascaded-fused, dd-naive or f64)"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `A * B` by any method. Cascaded methods also return their outcome.
pub fn multiply(a: &MatrixDD, b: &MatrixDD, method: Method, opts: &CascadeOptions) -> Result<(MatrixDD, Option<CascadeOutcome>)> {
    let mut c = MatrixDD::zeros(a.rows(), b.cols());
    match method {
        Method::CascadedSimple => {
            let out = cascaded_gemm(a, b, &mut c, Path::Simple, opts)?;
            Ok((c, Some(out)))
        }
        Method::CascadedFused => {
            let out = cascaded_gemm(a, b, &mut c, Path::Fused, opts)?;
            Ok((c, Some(out)))
        }
        Method::DdNaive => {
            ddgemm_naive(a, b, &mut c)?;
            Ok((c, None))
        }
        Method::F64 => {
            check_shapes(a, b, &c)?;
            let hi = |x: &MatrixDD| x.data().iter().map(|v| v.hi()).collect::<Vec<_>>();
            let (ah, bh) = (hi(a), hi(b));
            let mut out = vec![0.0; a.rows() * b.cols()];
            dgemm(
                MatRef::new(&ah, a.rows(), a.cols()),
                MatRef::new(&bh, b.rows(), b.cols()),
                &mut MatMut::new(&mut out, a.rows(), b.cols()),
                &opts.params,
            )?;
            let data = out.into_iter().map(DD::from_f64).collect::<Result<Vec<_>>>()?;
            Ok((MatrixDD::from_vec(a.rows(), b.cols(), data)?, None))
        }
    }
}
