//! Browser bindings. Every export returns a JSON string; errors come back as
//! `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ddcascade::cascade::{row_scale, select_widths, split_scalar, split_value as exact_split};
use ddcascade::datagen::{gen_illcond, gen_uniform_pair, gen_widerange, GenSpec};
use ddcascade::exact::{componentwise_error, exact_gemm};
use ddcascade::fp::hex_float;
use ddcascade::{multiply, CascadeOptions, Dyadic, Method, DD};

/// Largest matrix the page will ask for; the exact product is the slow part.
pub const MAX_DEMO_N: usize = 96;

fn wrap(r: ddcascade::Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn number(x: f64) -> Value {
    json!({ "value": x, "hex": hex_float(x) })
}

/// Splits `hi + lo` at depth `k`, scaled as if `row_max` were the largest
/// entry of its row.
pub fn split_json(hi: f64, lo: f64, row_max: f64, k: usize) -> ddcascade::Result<Value> {
    let w = select_widths(k)?;
    let x = DD::from_parts(hi, lo)?;
    let e = row_scale(&[x, DD::from_f64(row_max)?]);
    let parts = split_scalar(x, e, &w)?;
    let back = exact_split(parts, e, &w);
    let err = (&back - &Dyadic::from_dd(x)).abs();
    let row_bound = Dyadic::from_f64(2.0 * w.eps()) * Dyadic::pow2(e as i64);
    Ok(json!({
        "k": k,
        "scale_exponent": e,
        "shifts": [0, w.d0, w.d1, w.d2],
        "bits": [w.c0, w.c1, w.c2, w.c3],
        "parts": parts.iter().map(|&p| number(p)).collect::<Vec<_>>(),
        "abs_error": number(err.to_f64()),
        "rel_error": err.ratio_to(&Dyadic::from_dd(x)),
        "bound": number(row_bound.to_f64()),
    }))
}

/// Bit budget at depth `k`, with each exact-bin constraint spelled out.
pub fn widths_json(k: usize) -> ddcascade::Result<Value> {
    let w = select_widths(k)?;
    let l = ddcascade::cascade::ceil_log2(k);
    let (c0, c1, c2) = (w.c0, w.c1, w.c2);
    let rule = |name: &str, lhs: u32| json!({ "bin": name, "bits": lhs, "limit": 53 });
    Ok(json!({
        "k": k,
        "log2k": l,
        "c": [c0, c1, c2, w.c3],
        "d": [w.d0, w.d1, w.d2],
        "eps_exponent": w.eps_exponent(),
        "constraints": [
            rule("bin 0", 2 * c0 + l),
            rule("bin 1", c0 + c1 + l + 1),
            rule("bin 2 (a1 b1)", 2 * c1 + l + 2),
            rule("bin 2 (a0 b2)", c0 + c2 + l + 2),
        ],
    }))
}

/// Sorted componentwise errors of the cascaded and double-double products.
pub fn profile_json(kind: &str, n: usize, seed: u64, t: f64) -> ddcascade::Result<Value> {
    if n == 0 || n > MAX_DEMO_N {
        return Err(ddcascade::Error::InvalidSpec(format!("n must be in 1..={MAX_DEMO_N}")));
    }
    let (a, b) = match kind {
        "uniform" => gen_uniform_pair(&GenSpec::uniform(n, n, n, -1.0, 1.0, seed))?,
        "widerange" => gen_widerange(&GenSpec::widerange(n, n, n, seed))?,
        "illcond" => {
            let (a, b, _) = gen_illcond(&GenSpec::illcond(n, t, seed))?;
            (a, b)
        }
        other => return Err(ddcascade::Error::InvalidSpec(format!("unknown kind '{other}'"))),
    };
    let exact = exact_gemm(&a, &b)?;
    let opts = CascadeOptions::default();
    let (cc, outcome) = multiply(&a, &b, Method::CascadedFused, &opts)?;
    let (cd, _) = multiply(&a, &b, Method::DdNaive, &opts)?;
    let ec = componentwise_error(&cc, &exact)?;
    let ed = componentwise_error(&cd, &exact)?;
    let mut order: Vec<usize> = (0..ec.errors.len()).collect();
    order.sort_by(|&x, &y| ec.errors[x].total_cmp(&ec.errors[y]));
    let better = ec.errors.iter().zip(&ed.errors).filter(|(c, d)| c <= d).count();
    Ok(json!({
        "n": n,
        "cascaded": order.iter().map(|&i| ec.errors[i]).collect::<Vec<_>>(),
        "ddnaive": order.iter().map(|&i| ed.errors[i]).collect::<Vec<_>>(),
        "cascaded_max": ec.max_rel(),
        "ddnaive_max": ed.max_rel(),
        "cascaded_not_worse": better as f64 / ec.errors.len() as f64,
        "flagged": outcome.map(|o| o.report.flagged_count()).unwrap_or(0),
    }))
}

#[wasm_bindgen]
pub fn split_value(hi: f64, lo: f64, row_max: f64, k: usize) -> String {
    wrap(split_json(hi, lo, row_max, k))
}

#[wasm_bindgen]
pub fn width_budget(k: usize) -> String {
    wrap(widths_json(k))
}

#[wasm_bindgen]
pub fn error_profile(kind: &str, n: usize, seed: u32, t: f64) -> String {
    wrap(profile_json(kind, n, seed as u64, t))
}
