//! Radical-inverse (van der Corput) sequence.

use crate::error::{invalid, Result};

/// `Vdc_b(n)`: the base-`b` digits of `n` mirrored about the radix point.
///
/// The mirrored digits are accumulated as an integer numerator over `b^L`
/// and divided once, so base 2 is exact for every `n < 2^53`.
pub fn vdc(n: u64, base: u64) -> Result<f64> {
    if base < 2 {
        return Err(invalid("base", format!("van der Corput base must be >= 2, got {base}")));
    }
    Ok(radical_inverse(n, base))
}

pub(crate) fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let wide_base = base as u128;
    let mut numerator: u128 = 0;
    let mut denominator: u128 = 1;
    while n > 0 {
        match denominator.checked_mul(wide_base) {
            Some(next) if next <= 1u128 << 120 => {
                numerator = numerator * wide_base + (n % base) as u128;
                denominator = next;
                n /= base;
            }
            _ => break,
        }
    }
    let mut value = numerator as f64 / denominator as f64;
    // Digits beyond 2^-120 only matter below double precision.
    let mut scale = 1.0 / denominator as f64;
    while n > 0 {
        scale /= base as f64;
        value += (n % base) as f64 * scale;
        n /= base;
    }
    // Rounding can reach 1.0 for long runs of digit b-1; the true value is below it.
    value.min(1.0 - f64::EPSILON / 2.0)
}

/// Base-`b` digits of `n`, least significant first.
pub fn digits(mut n: u64, base: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while n > 0 {
        out.push(n % base);
        n /= base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two_prefix() {
        let expected = [0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875];
        for (n, e) in (1..=7).zip(expected) {
            assert_eq!(vdc(n, 2).unwrap(), e);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        for b in 2..20 {
            assert_eq!(vdc(0, b).unwrap(), 0.0);
        }
    }

    #[test]
    fn base_three_digit_reversal() {
        // 5 = 12_3 -> 0.21_3 = 2/3 + 1/9
        assert!((vdc(5, 3).unwrap() - 7.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn rejects_small_base() {
        assert!(vdc(3, 1).is_err());
        assert!(vdc(3, 0).is_err());
    }

    #[test]
    fn huge_indices_stay_in_unit_interval() {
        for b in [2, 3, 7, 10, 1000] {
            let v = vdc(u64::MAX, b).unwrap();
            assert!((0.0..1.0).contains(&v), "b={b} v={v}");
        }
        // 2^53 - 1 has 53 ones: 1 - 2^-53 is representable.
        assert_eq!(vdc((1 << 53) - 1, 2).unwrap(), 1.0 - 2f64.powi(-53));
    }

    #[test]
    fn digits_least_significant_first() {
        assert_eq!(digits(5, 3), vec![2, 1]);
        assert!(digits(0, 3).is_empty());
    }
}
