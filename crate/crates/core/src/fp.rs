//! Bit-level helpers for binary64 values.

/// `2^e` as a binary64, exact for `-1074 <= e <= 1023`.
///
/// Values outside that range saturate to `0.0` / `+inf`.
#[inline]
pub fn pow2(e: i32) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        0.0
    }
}

/// `x * 2^e` with the exponent applied in at most three exact steps.
///
/// Rounding only happens if the final result is subnormal; overflow gives
/// an infinity.
pub fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e.clamp(-4000, 4000);
    while e > 1023 {
        x *= pow2(1023);
        e -= 1023;
    }
    while e < -1022 {
        // Stop stepping once the value is about to leave the normal range so
        // the only rounding is the final one.
        if x == 0.0 || x.abs() < pow2(-1022 + 54) {
            break;
        }
        x *= pow2(-1022);
        e += 1022;
    }
    if e < -1022 {
        // Two steps: the first keeps the value normal, the second rounds once.
        let first = (e / 2) as i32;
        let second = (e - e / 2) as i32;
        return x * pow2(first) * pow2(second);
    }
    x * pow2(e as i32)
}

/// Exponent `t` with `2^t <= |x| < 2^(t+1)` for finite non-zero `x`.
pub fn floor_log2(x: f64) -> i32 {
    debug_assert!(x.is_finite() && x != 0.0);
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let mant = bits & ((1u64 << 52) - 1);
        -1075 + (64 - mant.leading_zeros() as i32)
    } else {
        biased - 1023
    }
}

/// Decompose a finite binary64 into `(m, e)` with `x = m * 2^e` and `|m| < 2^53`.
#[inline]
pub fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (mant, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), biased - 1075)
    };
    if bits >> 63 == 1 {
        (-mant, exp)
    } else {
        (mant, exp)
    }
}

/// Unit in the last place of a finite non-zero binary64.
pub fn ulp(x: f64) -> f64 {
    if x == 0.0 {
        return pow2(-1074);
    }
    pow2((floor_log2(x) - 52).max(-1074))
}

/// Hexadecimal floating-point literal (`0x1.8p-3`), for bit-exact CSV columns.
pub fn hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x == 0.0 {
        return format!("{sign}0x0p+0");
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let exp_sign = if exp < 0 { '-' } else { '+' };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{exp_sign}{}", exp.abs())
    }
}
