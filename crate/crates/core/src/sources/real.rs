//! Extended-precision real parameters.
//!
//! Phases such as `sqrt2 * n^3` need the fractional part of a product whose
//! integer part can exceed `2^53`. Parameters are therefore kept as
//! double-double values and the fractional part of `c * N` is reduced with
//! exact integer arithmetic on the mantissas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub const PI: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };

    pub const TAU: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::TAU,
        lo: 2.449_293_598_294_706_4e-16,
    };

    pub fn sqrt_of(k: f64) -> Self {
        let hi = k.sqrt();
        let residual = (-hi).mul_add(hi, k);
        quick_two_sum(hi, residual / (2.0 * hi))
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul(self, other: DoubleDouble) -> Self {
        let p = self.hi * other.hi;
        let err = self.hi.mul_add(other.hi, -p) + (self.hi * other.lo + self.lo * other.hi);
        quick_two_sum(p, err)
    }

    pub fn div(self, other: DoubleDouble) -> Self {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(DoubleDouble::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul(DoubleDouble::from_f64(q2)));
        let q3 = r.hi / other.hi;
        let s = quick_two_sum(q1, q2);
        quick_two_sum(s.hi, s.lo + q3)
    }

    pub fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, other: DoubleDouble) -> Self {
        let (s, e) = two_sum(self.hi, -other.hi);
        quick_two_sum(s, e + self.lo - other.lo)
    }

    /// Fractional part of `self * n` in `[0, 1)`, where `n` is taken modulo `2^128`.
    pub fn frac_mul(self, n: u128) -> f64 {
        let f = frac_mul_f64(self.hi, n) + frac_mul_f64(self.lo, n);
        let f = f - f.floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> DoubleDouble {
    let s = a + b;
    DoubleDouble {
        hi: s,
        lo: b - (s - a),
    }
}

/// Exact `frac(x * n)` for `x = m * 2^e` as long as `-e <= 127`.
fn frac_mul_f64(x: f64, n: u128) -> f64 {
    if x == 0.0 || n == 0 {
        return 0.0;
    }
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if biased == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), biased - 1075)
    };
    if exp >= 0 {
        // x is an integer.
        return 0.0;
    }
    let shift = -exp;
    let f = if shift > 127 {
        // |x| < 2^-74: the product carries no integer part worth tracking.
        (x.abs() * n as f64).fract()
    } else {
        let modulus_mask = if shift == 128 {
            u128::MAX
        } else {
            (1u128 << shift) - 1
        };
        let prod = (mantissa as u128).wrapping_mul(n) & modulus_mask;
        prod as f64 / 2f64.powi(shift)
    };
    if negative {
        if f == 0.0 {
            0.0
        } else {
            1.0 - f
        }
    } else {
        f
    }
}

/// A numeric parameter parsed from a literal expression such as
/// `1.0415*sqrt2`, `sqrt3`, `pi` or `2.5e-3`. The source text is kept so the
/// value round-trips through its canonical string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Real {
    text: String,
    value: DoubleDouble,
}

impl Real {
    pub fn from_f64(x: f64) -> Self {
        Real {
            text: format_f64(x),
            value: DoubleDouble::from_f64(x),
        }
    }

    pub fn value(&self) -> f64 {
        self.value.value()
    }

    pub fn extended(&self) -> DoubleDouble {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_factor(token: &str) -> Option<DoubleDouble> {
    let t = token.trim();
    if t.is_empty() {
        return None;
    }
    match t {
        "pi" => return Some(DoubleDouble::PI),
        "tau" => return Some(DoubleDouble::TAU),
        _ => {}
    }
    let sqrt_arg = t
        .strip_prefix("sqrt(")
        .and_then(|rest| rest.strip_suffix(')'))
        .or_else(|| t.strip_prefix("sqrt"));
    if let Some(arg) = sqrt_arg {
        let k: f64 = arg.parse().ok()?;
        if !(k >= 0.0) || !k.is_finite() {
            return None;
        }
        return Some(DoubleDouble::sqrt_of(k));
    }
    let x: f64 = t.parse().ok()?;
    x.is_finite().then(|| DoubleDouble::from_f64(x))
}

/// Parses `[-]factor(*factor|/factor)*`.
pub fn parse_expression(text: &str) -> Result<DoubleDouble> {
    let err = || Error::Expression(text.to_string());
    let trimmed = text.trim();
    let (negate, body) = match trimmed.strip_prefix('-') {
        Some(rest) if !rest.starts_with(|c: char| c.is_ascii_digit() || c == '.') => (true, rest),
        _ => (false, trimmed),
    };
    let mut acc: Option<DoubleDouble> = None;
    let mut pending_div = false;
    let mut start = 0;
    let bytes = body.as_bytes();
    for i in 0..=bytes.len() {
        let at_end = i == bytes.len();
        if !at_end && bytes[i] != b'*' && bytes[i] != b'/' {
            continue;
        }
        let factor = parse_factor(&body[start..i]).ok_or_else(err)?;
        acc = Some(match acc {
            None => factor,
            Some(a) if pending_div => {
                if factor.hi == 0.0 {
                    return Err(err());
                }
                a.div(factor)
            }
            Some(a) => a.mul(factor),
        });
        if !at_end {
            pending_div = bytes[i] == b'/';
        }
        start = i + 1;
    }
    let value = acc.ok_or_else(err)?;
    Ok(if negate { value.neg() } else { value })
}

impl FromStr for Real {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value = parse_expression(s)?;
        Ok(Real {
            text: s.trim().to_string(),
            value,
        })
    }
}

impl TryFrom<String> for Real {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Real> for String {
    fn from(r: Real) -> String {
        r.text
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Parses a scalar flag value: a plain number, scientific notation, or an
/// expression with the named constants.
pub fn parse_scalar(text: &str) -> Result<f64> {
    parse_expression(text).map(DoubleDouble::value)
}

/// Parses a count such as `1e6` or `10000`.
pub fn parse_count(text: &str) -> Result<u64> {
    let trimmed = text.trim();
    if let Ok(n) = trimmed.parse::<u64>() {
        return Ok(n);
    }
    let x = parse_scalar(trimmed)?;
    if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(Error::Expression(text.to_string()));
    }
    Ok(x as u64)
}
