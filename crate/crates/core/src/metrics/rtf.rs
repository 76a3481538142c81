//! Real-time factor: inference time divided by audio duration.

use crate::{Error, Result};

/// `inference_seconds / audio_seconds`, evaluated exactly on the shortest
/// decimal forms of both inputs and rounded once. Plain `4.4 / 10.0` lands
/// one ulp above `0.44`; this returns `0.44`.
pub fn rtf(inference_seconds: f64, audio_seconds: f64) -> Result<f64> {
    if !(audio_seconds > 0.0) || !audio_seconds.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "audio duration must be positive, got {audio_seconds}"
        )));
    }
    if !(inference_seconds >= 0.0) || !inference_seconds.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "inference time must be nonnegative, got {inference_seconds}"
        )));
    }
    Ok(decimal_quotient(inference_seconds, audio_seconds).unwrap_or(inference_seconds / audio_seconds))
}

/// Splits a finite nonnegative float into `mantissa * 10^exponent` using its
/// shortest round-trip decimal representation.
fn to_decimal(x: f64) -> Option<(u128, i32)> {
    let s = format!("{x:e}");
    let (digits, exp) = s.split_once('e')?;
    let exp: i32 = exp.parse().ok()?;
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let mantissa: u128 = format!("{int}{frac}").parse().ok()?;
    Some((mantissa, exp - frac.len() as i32))
}

fn decimal_quotient(num: f64, den: f64) -> Option<f64> {
    let (n, en) = to_decimal(num)?;
    let (d, ed) = to_decimal(den)?;
    if n == 0 {
        return Some(0.0);
    }
    // value = n / d * 10^(en - ed); emit 40 significant digits by long
    // division plus a sticky digit so the final parse rounds correctly.
    let mut exp10 = en - ed;
    let mut rem = n;
    let mut d = d;
    while rem >= d.checked_mul(10)? {
        d *= 10;
        exp10 += 1;
    }
    while rem < d {
        rem = rem.checked_mul(10)?;
        exp10 -= 1;
    }
    let mut digits = String::with_capacity(42);
    for _ in 0..40 {
        let q = rem / d;
        digits.push(char::from(b'0' + q as u8));
        rem = (rem % d).checked_mul(10)?;
        if rem == 0 {
            break;
        }
    }
    if rem != 0 {
        digits.push('1');
    }
    let text = format!("0.{digits}e{}", exp10 + 1);
    text.parse().ok()
}
