//! Exact and directed decimal conversion of binary floats.

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};

/// `x` as `(n, k)` with `x = n / 10^k` exactly (dyadic rationals always are).
fn scaled(x: &Float) -> (Integer, u32) {
    let (m, e) = x.to_integer_exp().expect("finite float");
    if e >= 0 {
        (m << e as u32, 0)
    } else {
        let k = (-e) as u32;
        (m * Integer::from(5).pow(k), k)
    }
}

fn render(n: &Integer, k: u32) -> String {
    let neg = *n < 0;
    let digits = n.clone().abs().to_string();
    let k = k as usize;
    let body = if k == 0 {
        digits
    } else if digits.len() > k {
        format!("{}.{}", &digits[..digits.len() - k], &digits[digits.len() - k..])
    } else {
        format!("0.{}{}", "0".repeat(k - digits.len()), digits)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Exact decimal expansion, trailing zeros removed.
pub fn exact_decimal(x: &Float) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let (n, k) = scaled(x);
    let s = render(&n, k);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to `digits` decimals, downward when `up` is false.
pub fn directed_decimal(x: &Float, digits: u32, up: bool) -> String {
    let (n, k) = scaled(x);
    if k <= digits {
        let n = n * Integer::from(10).pow(digits - k);
        return render(&n, digits);
    }
    let div = Integer::from(10).pow(k - digits);
    let (q, r) = n.div_rem_floor(div);
    let q = if up && r != 0 { q + 1 } else { q };
    render(&q, digits)
}

/// Parse a decimal string that must denote a float exactly at `prec` bits.
pub fn parse_exact(s: &str, prec: u32) -> Result<Float> {
    let bad = || Error::Certificate(format!("not an exact decimal: {s}"));
    let parsed = Float::parse(s).map_err(|_| bad())?;
    let (x, dir) = Float::with_val_round(prec, parsed, Round::Nearest);
    if dir != std::cmp::Ordering::Equal || exact_decimal(&x) != normalise(s) {
        return Err(bad());
    }
    Ok(x)
}

fn normalise(s: &str) -> String {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let body = body.trim_start_matches('0');
    let body = if body.contains('.') {
        body.trim_end_matches('0').trim_end_matches('.')
    } else {
        body
    };
    let body = if body.is_empty() || body.starts_with('.') { format!("0{body}") } else { body.to_string() };
    if neg && body != "0" {
        format!("-{body}")
    } else {
        body
    }
}

/// Longest common prefix of two decimal strings, cut back to whole digits.
pub fn common_digits(a: &str, b: &str) -> String {
    let n = a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count();
    let s = &a[..n];
    s.trim_end_matches('.').to_string()
}

/// Decimals worth printing for a bracket of width `w`, capped at 50.
pub fn digits_for_width(w: f64) -> u32 {
    if w <= 0.0 {
        return 50;
    }
    ((-w.log10()).ceil() as i64 + 2).clamp(1, 50) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact() {
        assert_eq!(exact_decimal(&Float::with_val(64, 0.375)), "0.375");
        assert_eq!(exact_decimal(&Float::with_val(64, -2.5)), "-2.5");
        assert_eq!(exact_decimal(&Float::with_val(64, 12)), "12");
        let tiny = Float::with_val(64, Float::i_exp(1, -60));
        assert_eq!(exact_decimal(&tiny), "0.000000000000000000867361737988403547205962240695953369140625");
    }

    #[test]
    fn directed() {
        let x = Float::with_val(64, 0.375);
        assert_eq!(directed_decimal(&x, 2, false), "0.37");
        assert_eq!(directed_decimal(&x, 2, true), "0.38");
        assert_eq!(directed_decimal(&x, 4, false), "0.3750");
        let y = Float::with_val(64, -0.375);
        assert_eq!(directed_decimal(&y, 1, false), "-0.4");
        assert_eq!(directed_decimal(&y, 1, true), "-0.3");
    }

    #[test]
    fn parse_round_trip() {
        let x = Float::with_val(200, 5) / 1024u32;
        let s = exact_decimal(&x);
        assert_eq!(parse_exact(&s, 200).unwrap(), x);
        assert!(parse_exact("0.1", 200).is_err());
        assert_eq!(parse_exact("0.50", 64).unwrap(), 0.5);
    }

    #[test]
    fn prefixes() {
        assert_eq!(common_digits("0.5516185683724609", "0.5516185683724611"), "0.55161856837246");
        assert_eq!(common_digits("0.6", "0.7"), "0");
        assert_eq!(digits_for_width(1e-13), 15);
    }
}
