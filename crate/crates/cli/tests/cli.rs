use std::path::Path;
use std::process::{Command, Output};

use ddcascade::MatrixDD;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddcascade"))
        .args(args)
        .current_dir(dir)
        .env_remove("DDCASCADE_FAULT")
        .output()
        .expect("spawn ddcascade")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn load(path: &Path) -> MatrixDD {
    MatrixDD::from_bytes(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn gen_writes_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--kind", "uniform", "--m", "8", "--n", "8", "--lo", "-1", "--hi", "1", "--seed", "7"];
    let first = ok(dir.path(), &args);
    let bytes = std::fs::read(dir.path().join("uniform.ddm")).unwrap();
    assert_eq!(&bytes[..4], b"DDM1");
    assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 8);
    assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 8);
    assert_eq!(bytes.len(), 20 + 16 * 64);
    assert_eq!(ok(dir.path(), &args), first);
    // write -> read -> write is byte identical
    assert_eq!(load(&dir.path().join("uniform.ddm")).to_bytes(), bytes);
}

#[test]
fn illcond_gives_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["gen", "--kind", "illcond", "--n", "24", "--t", "1e-19", "--seed", "1", "--out", "ill"]);
    assert_eq!(out.lines().count(), 3);
    for s in ["A", "B", "C"] {
        assert_eq!(load(&dir.path().join(format!("ill_{s}.ddm"))).rows(), 24);
    }
}

#[test]
fn multiply_methods() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--kind", "uniform", "--m", "20", "--n", "9", "--k", "300", "--seed", "3", "--out", "u"]);
    let fused = ok(d, &["multiply", "--a", "u_A.ddm", "--b", "u_B.ddm", "--out", "f.ddm"]);
    let line = fused.lines().find(|l| l.starts_with("gemm_products = ")).expect("product line");
    let nums: Vec<u64> = line.split(' ').filter_map(|w| w.parse().ok()).collect();
    // 5 x 3 micro tiles in each of two depth panels
    assert_eq!(nums, vec![300, 10, 30], "{line}");
    assert!(d.join("f.ddm.flags.csv").exists());
    ok(d, &["multiply", "--a", "u_A.ddm", "--b", "u_B.ddm", "--method", "cascaded-simple", "--out", "s.ddm", "--kc", "128"]);
    let (f, s) = (load(&d.join("f.ddm")), load(&d.join("s.ddm")));
    for (x, y) in f.data().iter().zip(s.data()) {
        let diff = (*x - *y).hi().abs();
        assert!(diff <= x.hi().abs() * 2f64.powi(-100), "{x:?} {y:?}");
    }

    // dd-naive with the identity reproduces B
    let eye = MatrixDD::identity(300);
    std::fs::write(d.join("eye.ddm"), eye.to_bytes()).unwrap();
    ok(d, &["multiply", "--a", "eye.ddm", "--b", "u_B.ddm", "--method", "dd-naive", "--out", "e.ddm"]);
    assert_eq!(std::fs::read(d.join("e.ddm")).unwrap(), std::fs::read(d.join("u_B.ddm")).unwrap());
}

#[test]
fn accuracy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // non-negative entries: no cancellation, so the componentwise bound applies
    ok(d, &["gen", "--kind", "uniform", "--n", "32", "--k", "32", "--lo", "0", "--hi", "1", "--seed", "5", "--out", "u"]);
    let args = ["accuracy", "--a", "u_A.ddm", "--b", "u_B.ddm", "--seed", "5", "--sorted-errors", "sorted.txt"];
    let csv = ok(d, &args);
    assert_eq!(ok(d, &args), csv);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let err: f64 = r[col("max_rel_err")].parse().unwrap();
        assert!(err >= 0.0);
        if r[col("method")] == "dd-naive" {
            assert!(err <= 32.0 * 2f64.powi(-105), "{err:e}");
        }
    }
    let sorted = std::fs::read_to_string(d.join("sorted.txt")).unwrap();
    assert_eq!(sorted.lines().count(), 1 + 32 * 32);
}

#[test]
fn bench_columns_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(dir.path(), &["bench", "--sizes", "40", "--methods", "f64,cascaded-fused", "--reps", "1"]);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][col("flops")], (2 * 40u64 * 40 * 40).to_string());
    assert_eq!(rows[1][col("flops")], (20 * 40u64 * 40 * 40).to_string());
    let t: f64 = rows[1][col("median_s")].parse().unwrap();
    let base: f64 = rows[1][col("f64_median_s")].parse().unwrap();
    let ratio: f64 = rows[1][col("ratio_vs_f64")].parse().unwrap();
    assert_eq!(ratio, t / base);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["gen", "--kind", "bogus", "--n", "3"]).status.code(), Some(1));
    assert_eq!(run(d, &["multiply", "--a", "missing.ddm", "--b", "x", "--out", "y"]).status.code(), Some(3));
    std::fs::write(d.join("junk.ddm"), b"not a matrix").unwrap();
    assert_eq!(run(d, &["multiply", "--a", "junk.ddm", "--b", "junk.ddm", "--out", "y"]).status.code(), Some(3));
    ok(d, &["gen", "--kind", "uniform", "--m", "3", "--n", "4", "--seed", "1", "--out", "p"]);
    assert_eq!(run(d, &["multiply", "--a", "p.ddm", "--b", "p.ddm", "--out", "y"]).status.code(), Some(1));
}

#[test]
fn selftest_passes_and_catches_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["selftest"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("criterion")).count(), 10);

    let bad = Command::new(env!("CARGO_BIN_EXE_ddcascade"))
        .arg("selftest")
        .env("DDCASCADE_FAULT", "bin2-align")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("criterion  2 [FAIL]")), "{text}");
}
