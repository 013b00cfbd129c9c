//! Decimal rendering of exact rationals.
//!
//! Inexact expansions are truncated, never rounded, and carry a trailing `~`.

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

/// `10^-digits` as an exact rational.
pub fn ten_pow_neg(digits: u32) -> BigRational {
    BigRational::new(BigInt::one(), num::pow(BigInt::from(10), digits as usize))
}

/// Decimal expansion of `value` truncated toward zero after `digits`
/// fractional digits. Terminating expansions print exactly, without trailing
/// zeros; truncated ones end in `~`.
pub fn truncate(value: &BigRational, digits: usize) -> String {
    let negative = value.is_negative();
    let abs = value.abs();
    let (int_part, mut rem) = abs.numer().div_rem(abs.denom());
    let den = abs.denom();
    let mut frac = String::new();
    let ten = BigInt::from(10);
    while !rem.is_zero() && frac.len() < digits {
        rem *= &ten;
        let (d, r) = rem.div_rem(den);
        frac.push_str(&d.to_string());
        rem = r;
    }
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if !frac.is_empty() {
        out.push('.');
        out.push_str(&frac);
    }
    if !rem.is_zero() {
        out.push('~');
    }
    out
}

/// Two-significant-digit scientific notation rounded up, for error bounds.
pub fn sci_upper(value: &BigRational) -> String {
    let x = value.abs();
    if x.is_zero() {
        return "0".to_string();
    }
    let ten = BigRational::from_integer(BigInt::from(10));
    // first guess from bit lengths, then correct so that 10^k <= x < 10^(k+1)
    let bits = x.numer().bits() as i64 - x.denom().bits() as i64;
    let mut k = (bits as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let pow10 = |k: i64| -> BigRational {
        let p = num::pow(ten.clone(), k.unsigned_abs() as usize);
        if k < 0 {
            p.recip()
        } else {
            p
        }
    };
    while pow10(k) > x {
        k -= 1;
    }
    while pow10(k + 1) <= x {
        k += 1;
    }
    let mut mantissa = (x / pow10(k - 1)).ceil().to_integer();
    if mantissa == BigInt::from(100) {
        mantissa = BigInt::from(10);
        k += 1;
    }
    let (whole, tenth) = mantissa.div_rem(&BigInt::from(10));
    format!("{whole}.{tenth}e{k}")
}

/// Parses a plain decimal literal (`-2.718`, `3`, `.5`) into an exact
/// rational plus its count of fractional digits.
pub fn parse_decimal(text: &str) -> Option<(BigRational, u32)> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mantissa: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let places = frac_part.len() as u32;
    let value = BigRational::from_integer(mantissa) * ten_pow_neg(places);
    Some((if negative { -value } else { value }, places))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn truncation_marks_inexact_values() {
        assert_eq!(truncate(&r(11, 4), 20), "2.75");
        assert_eq!(truncate(&r(3, 1), 20), "3");
        assert_eq!(truncate(&r(49, 18), 6), "2.722222~");
        assert_eq!(truncate(&r(-2, 3), 3), "-0.666~");
        assert_eq!(truncate(&r(2, 3), 0), "0~");
    }

    #[test]
    fn scientific_bounds_round_up() {
        assert_eq!(sci_upper(&r(1, 1000)), "1.0e-3");
        assert_eq!(sci_upper(&r(1234, 1)), "1.3e3");
        assert_eq!(sci_upper(&r(999, 1000)), "1.0e0");
        assert_eq!(sci_upper(&r(1, 3)), "3.4e-1");
        assert_eq!(sci_upper(&r(0, 1)), "0");
    }

    #[test]
    fn parses_decimals() {
        assert_eq!(parse_decimal("2.75"), Some((r(11, 4), 2)));
        assert_eq!(parse_decimal("-0.5"), Some((r(-1, 2), 1)));
        assert_eq!(parse_decimal("7"), Some((r(7, 1), 0)));
        assert_eq!(parse_decimal("1e5"), None);
        assert_eq!(parse_decimal("."), None);
    }
}
