//! C-style numeric formatting.
//!
//! The iteration traces and the CLI result blocks are specified against
//! `printf`-style conversions (`%9.2e`, `%.15g`), which Rust's standard
//! formatter does not reproduce (it prints `3.59e-1`, not `3.59e-01`).

use num_complex::Complex64;

/// `%w.pe`: scientific notation with `prec` fractional digits and a
/// sign-and-two-digit exponent, right-aligned to `width`.
pub fn format_e(value: f64, prec: usize, width: usize) -> String {
    let s = if value.is_nan() {
        "nan".to_string()
    } else if value.is_infinite() {
        if value < 0.0 { "-inf".to_string() } else { "inf".to_string() }
    } else {
        // Rust's `{:.*e}` rounds the mantissa correctly; only the exponent
        // field needs rewriting into the C convention.
        let r = format!("{:.*e}", prec, value);
        let (mant, exp) = r.split_once('e').expect("exponent marker");
        let exp: i32 = exp.parse().expect("exponent digits");
        format!("{}e{}{:02}", mant, if exp < 0 { '-' } else { '+' }, exp.abs())
    };
    if s.len() >= width {
        s
    } else {
        format!("{:>width$}", s, width = width)
    }
}

/// `%.Pg`: shortest of fixed/scientific at `prec` significant digits,
/// trailing zeros stripped.
pub fn format_g(value: f64, prec: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value < 0.0 { "-inf" } else { "inf" }.to_string();
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, value);
    let (mant, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= prec as i32 {
        let mant = strip_trailing_zeros(mant);
        format!("{}e{}{:02}", mant, if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        strip_trailing_zeros(&format!("{:.*}", decimals, value))
    }
}

fn strip_trailing_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// `%.15g%+.15gi`: the complex scalar format used in result blocks.
pub fn format_complex(z: Complex64) -> String {
    let re = normalize_zero(z.re);
    let im = normalize_zero(z.im);
    let im_str = format_g(im.abs(), 15);
    format!("{}{}{}i", format_g(re, 15), if im < 0.0 { '-' } else { '+' }, im_str)
}

fn normalize_zero(v: f64) -> f64 {
    if v == 0.0 { 0.0 } else { v }
}
