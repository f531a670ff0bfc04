//! `ddcascade`: generate matrices, multiply them, measure accuracy and speed.

use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ddcascade::checks::{run_all, CheckConfig};
use ddcascade::datagen::{gen_illcond, gen_uniform, gen_uniform_pair, gen_widerange, GenKind, GenSpec};
use ddcascade::exact::{componentwise_error, exact_gemm};
use ddcascade::fp::hex_float;
use ddcascade::{multiply, BlockingParams, CascadeOptions, Error, MatrixDD, Method};

#[derive(Parser)]
#[command(name = "ddcascade", version, about = "Double-double GEMM from ten binary64 GEMMs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated matrices to DDM1 files and print their hashes.
    Gen(GenArgs),
    /// Multiply two matrix files.
    Multiply(MultiplyArgs),
    /// Componentwise error of each method against the exact product.
    Accuracy(AccuracyArgs),
    /// Time each method on uniform square matrices.
    Bench(BenchArgs),
    /// Run the numerical checks at reduced size.
    Selftest,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: GenKind,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: usize,
    /// Inner size. Uniform matrices get an `A`/`B` pair when it is given.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    hi: f64,
    /// Ill-conditioned target magnitude.
    #[arg(long, default_value_t = 1e-19)]
    t: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output prefix; defaults to the kind name.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct GemmArgs {
    /// Rank-k panel depth.
    #[arg(long, default_value_t = 256)]
    kc: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl GemmArgs {
    fn options(&self) -> CascadeOptions {
        CascadeOptions { params: BlockingParams::with_kc(self.kc), threads: self.threads, record_bins: false }
    }
}

#[derive(Args)]
struct MultiplyArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "cascaded-fused")]
    method: Method,
    #[arg(long)]
    out: PathBuf,
    /// Flag CSV for cascaded methods; defaults to `<out>.flags.csv`.
    #[arg(long)]
    flags: Option<PathBuf>,
    #[command(flatten)]
    gemm: GemmArgs,
}

#[derive(Args)]
struct AccuracyArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cascaded-simple,cascaded-fused,dd-naive,f64")]
    methods: Vec<Method>,
    /// Seed recorded in the CSV.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-element errors, sorted by the first method's error.
    #[arg(long)]
    sorted_errors: Option<PathBuf>,
    #[command(flatten)]
    gemm: GemmArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "f64,dd-naive,cascaded-simple,cascaded-fused")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    gemm: GemmArgs,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) | Error::ScaleOutOfRange { .. } | Error::Breakdown(_) => Failure::Numeric(e.to_string()),
            Error::Format(_) => Failure::Io(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn io_err(path: &FsPath, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read_matrix(path: &FsPath) -> Result<MatrixDD, Failure> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    MatrixDD::from_bytes(&bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &FsPath, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Shortest round-trip decimal followed by the hex float.
fn num(x: f64) -> String {
    format!("{x:e},{}", hex_float(x))
}

fn emit_csv(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(g: &GenArgs) -> Result<(), Failure> {
    let prefix = g.out.clone().unwrap_or_else(|| match g.kind {
        GenKind::Uniform => "uniform".into(),
        GenKind::WideRange => "widerange".into(),
        GenKind::IllCond => "illcond".into(),
    });
    let m = g.m.unwrap_or(g.n);
    let mats: Vec<(String, MatrixDD)> = match g.kind {
        GenKind::Uniform => match g.k {
            None => vec![(String::new(), gen_uniform(&GenSpec::uniform(m, g.n, 1, g.lo, g.hi, g.seed))?)],
            Some(k) => {
                let (a, b) = gen_uniform_pair(&GenSpec::uniform(m, g.n, k, g.lo, g.hi, g.seed))?;
                vec![("_A".into(), a), ("_B".into(), b)]
            }
        },
        GenKind::WideRange => {
            let (a, b) = gen_widerange(&GenSpec::widerange(m, g.n, g.k.unwrap_or(g.n), g.seed))?;
            vec![("_A".into(), a), ("_B".into(), b)]
        }
        GenKind::IllCond => {
            if g.m.is_some_and(|m| m != g.n) || g.k.is_some_and(|k| k != g.n) {
                return Err(Failure::Usage("illcond matrices are square; give only --n".into()));
            }
            let (a, b, c) = gen_illcond(&GenSpec::illcond(g.n, g.t, g.seed))?;
            vec![("_A".into(), a), ("_B".into(), b), ("_C".into(), c)]
        }
    };
    for (suffix, mat) in mats {
        let path = PathBuf::from(format!("{prefix}{suffix}.ddm"));
        write_file(&path, &mat.to_bytes())?;
        println!("{} {}x{} sha256={}", path.display(), mat.rows(), mat.cols(), mat.content_hash());
    }
    Ok(())
}

fn cmd_multiply(args: &MultiplyArgs) -> Result<(), Failure> {
    let a = read_matrix(&args.a)?;
    let b = read_matrix(&args.b)?;
    let (c, outcome) = multiply(&a, &b, args.method, &args.gemm.options())?;
    write_file(&args.out, &c.to_bytes())?;
    println!("{} {}x{} sha256={}", args.out.display(), c.rows(), c.cols(), c.content_hash());
    if let Some(out) = outcome {
        let pairs = out.stats.pairs;
        println!("gemm_products = {} = 10 x {pairs} panels", out.stats.products);
        let path = args.flags.clone().unwrap_or_else(|| {
            let mut s = args.out.clone().into_os_string();
            s.push(".flags.csv");
            PathBuf::from(s)
        });
        let mut csv = String::from("i,j\n");
        for (i, j) in out.report.flagged_indices() {
            let _ = writeln!(csv, "{i},{j}");
        }
        write_file(&path, csv.as_bytes())?;
        println!("flagged = {} ({})", out.report.flagged_count(), path.display());
    }
    Ok(())
}

fn cmd_accuracy(args: &AccuracyArgs) -> Result<(), Failure> {
    if args.methods.is_empty() {
        return Err(Failure::Usage("no methods given".into()));
    }
    let a = read_matrix(&args.a)?;
    let b = read_matrix(&args.b)?;
    let exact = exact_gemm(&a, &b)?;
    let seed = args.seed.map(|s| s.to_string()).unwrap_or_default();
    let (m, n, k) = (a.rows(), b.cols(), a.cols());
    let mut csv = String::from(
        "seed,m,n,k,method,max_rel_err,max_rel_err_hex,mean_rel_err,mean_rel_err_hex,flagged_count,zero_exact_count\n",
    );
    let mut reports = Vec::new();
    for &method in &args.methods {
        let (c, outcome) = multiply(&a, &b, method, &args.gemm.options())?;
        let rep = componentwise_error(&c, &exact)?;
        let flagged = outcome.map(|o| o.report.flagged_count().to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{seed},{m},{n},{k},{method},{},{},{flagged},{}",
            num(rep.max_rel()),
            num(rep.mean_rel()),
            rep.zero_exact_count()
        );
        reports.push(rep);
    }
    emit_csv(args.out.as_ref(), &csv)?;
    if let Some(path) = &args.sorted_errors {
        let mut order: Vec<usize> = (0..reports[0].errors.len()).collect();
        order.sort_by(|&x, &y| reports[0].errors[x].total_cmp(&reports[0].errors[y]));
        let mut text = String::from("# rank");
        for method in &args.methods {
            let _ = write!(text, " {method}");
        }
        text.push('\n');
        for (rank, &idx) in order.iter().enumerate() {
            let _ = write!(text, "{rank}");
            for r in &reports {
                let _ = write!(text, " {:e}", r.errors[idx]);
            }
            text.push('\n');
        }
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let h = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[h]
    } else {
        0.5 * (xs[h - 1] + xs[h])
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    if args.reps == 0 || args.sizes.contains(&0) {
        return Err(Failure::Usage("sizes and reps must be positive".into()));
    }
    let opts = args.gemm.options();
    let mut csv = String::from("size,method,reps,median_s,median_s_hex,flops,gflops,gflops_hex,f64_median_s,f64_median_s_hex,ratio_vs_f64,ratio_vs_f64_hex\n");
    for &size in &args.sizes {
        let (a, b) = gen_uniform_pair(&GenSpec::uniform(size, size, size, -1.0, 1.0, args.seed))?;
        let time = |method: Method| -> Result<f64, Failure> {
            let mut samples = Vec::with_capacity(args.reps);
            for _ in 0..args.reps {
                let start = Instant::now();
                std::hint::black_box(multiply(&a, &b, method, &opts)?);
                samples.push(start.elapsed().as_secs_f64());
            }
            Ok(median(samples))
        };
        let base = time(Method::F64)?;
        for &method in &args.methods {
            let t = if method == Method::F64 { base } else { time(method)? };
            let flops = method.flops(size, size, size);
            let gflops = flops as f64 / t / 1e9;
            let _ = writeln!(
                csv,
                "{size},{method},{},{},{flops},{},{},{}",
                args.reps,
                num(t),
                num(gflops),
                num(base),
                num(t / base)
            );
        }
    }
    emit_csv(args.out.as_ref(), &csv)
}

fn cmd_selftest() -> Result<(), Failure> {
    let results = run_all(&CheckConfig::reduced());
    let failed: Vec<_> = results.iter().filter(|r| r.gating && !r.passed).collect();
    for r in &results {
        println!("{}", r.line());
    }
    if failed.is_empty() {
        println!("selftest passed");
        Ok(())
    } else {
        let ids: Vec<String> = failed.iter().map(|r| r.id.to_string()).collect();
        Err(Failure::Numeric(format!("failing criteria: {}", ids.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.cmd {
        Command::Gen(g) => cmd_gen(g),
        Command::Multiply(m) => cmd_multiply(m),
        Command::Accuracy(a) => cmd_accuracy(a),
        Command::Bench(b) => cmd_bench(b),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Numeric(m) | Failure::Io(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
