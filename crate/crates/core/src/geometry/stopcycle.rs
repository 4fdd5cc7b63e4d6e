//! When a periodic-looking start of an even base stops closing its blocks.
//!
//! From `z_{-1} = (eps, M/2)`, with `M` the height of the unit-side `b`-gon,
//! block `k` is minus-signed and closes while its rotation `2 pi Vdc_b(kb)`
//! stays below `theta* = arctan(M / (2 eps)) - pi/2 + 2 pi / b`.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use super::{block_polygon, VdcWalker};
use crate::error::{invalid, Result};
use crate::point::Point;
use crate::sources::digits;
#[cfg(test)]
use crate::sources::radical_inverse;
use crate::walk::Sign;

/// Vertical extent of the block polygon of an even base, `cot(pi / b)`.
pub fn polygon_height(b: u64) -> f64 {
    let ys = block_polygon(b, 0.0, [0.0, 0.0]);
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
    hi - lo
}

/// Smallest `k` with `Vdc_b(k) >= t`, built digit by digit.
///
/// The number of digits is the least `L` with `1 - b^{-L} >= t`. Digits are
/// then fixed from the most significant one of `k` down, each as small as
/// the remaining digits, all set to `b - 1`, still allow.
pub fn min_index_reaching(t: f64, b: u64) -> Result<u64> {
    if b < 2 {
        return Err(invalid("b", "must be >= 2"));
    }
    if !(t < 1.0) {
        return Err(invalid("t", "radical inverses stay below 1"));
    }
    if t <= 0.0 {
        return Ok(0);
    }
    let bf = b as f64;
    let mut len = 1;
    while 1.0 - bf.powi(-len) < t {
        len += 1;
    }
    let mut acc = 0.0;
    let mut k: u64 = 0;
    for i in (0..len).rev() {
        let weight = bf.powi(-(i + 1));
        let rest = 1.0 - bf.powi(-i);
        let digit = (0..b)
            .find(|&a| acc + a as f64 * weight + rest >= t)
            .expect("top digit always suffices");
        acc += digit as f64 * weight;
        k = k * b + digit;
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCycle {
    pub b: u64,
    pub eps: f64,
    pub height: f64,
    pub start: Point,
    /// `theta*`.
    pub threshold: f64,
    /// First block whose rotation reaches the threshold.
    pub k: u64,
    /// `k b`, the steps taken before that block.
    pub step_budget: u64,
    /// `step_budget` written in base `b`, most significant digit first.
    pub step_budget_base_b: String,
}

/// Predicts the first block that fails to close from `(eps, M/2)`.
pub fn predicted_stop_cycle(b: u64, eps: f64) -> Result<StopCycle> {
    if b < 4 || b % 2 != 0 {
        return Err(invalid("b", format!("stop cycles are defined for even b >= 4, got {b}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", "must be positive"));
    }
    let bf = b as f64;
    let height = polygon_height(b);
    let threshold = (height / (2.0 * eps)).atan() - FRAC_PI_2 + TAU / bf;
    if !(threshold < TAU / bf) {
        return Err(invalid("eps", "threshold leaves the first sector"));
    }
    // 2 pi Vdc_b(kb) = 2 pi Vdc_b(k) / b.
    let k = min_index_reaching(threshold * bf / TAU, b)?;
    let step_budget = k * b;
    Ok(StopCycle {
        b,
        eps,
        height,
        start: Point::xy(eps, height / 2.0),
        threshold,
        k,
        step_budget,
        step_budget_base_b: base_b_string(step_budget, b),
    })
}

fn base_b_string(n: u64, b: u64) -> String {
    let mut ds = digits(n, b);
    if ds.is_empty() {
        ds.push(0);
    }
    let single = b <= 36;
    let parts: Vec<String> = ds
        .iter()
        .rev()
        .map(|&d| {
            if single {
                char::from_digit(d as u32, b as u32).expect("digit below base").to_string()
            } else {
                format!("[{d}]")
            }
        })
        .collect();
    parts.concat()
}

/// First block, from `(eps, M/2)`, that is not all minus signs or does not
/// return within `tol`. `None` if every one of `max_cycles` blocks closes.
pub fn simulated_stop_cycle(b: u64, eps: f64, max_cycles: u64, tol: f64) -> Result<Option<u64>> {
    let start = Point::xy(eps, polygon_height(b) / 2.0);
    let mut w = VdcWalker::new(b, &start)?;
    let z0 = w.z;
    for k in 0..max_cycles {
        let minus = (0..b).all(|_| w.step() == Some(Sign::Minus));
        if !minus || w.distance_to(z0) > tol {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Brute-force counterpart of [`min_index_reaching`].
#[cfg(test)]
fn scan_index_reaching(t: f64, b: u64) -> u64 {
    (0..).find(|&k| radical_inverse(k, b) >= t).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn height_is_cotangent() {
        for b in [4u64, 6, 8, 10, 16] {
            assert!((polygon_height(b) - 1.0 / (PI / b as f64).tan()).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn digit_algorithm_matches_scan() {
        for b in [2u64, 4, 6, 8] {
            for i in 0..200 {
                let t = (i as f64 + 0.37) / 200.0;
                assert_eq!(min_index_reaching(t, b).unwrap(), scan_index_reaching(t, b), "b={b} t={t}");
            }
        }
        assert_eq!(min_index_reaching(0.0, 8).unwrap(), 0);
        assert!(min_index_reaching(1.0, 8).is_err());
    }

    #[test]
    fn base_eight_prediction() {
        let s = predicted_stop_cycle(8, 0.2).unwrap();
        assert_eq!(s.k, 7);
        assert_eq!(s.step_budget, 56);
        assert_eq!(s.step_budget_base_b, "70");
        assert!(predicted_stop_cycle(7, 0.2).is_err());
        assert!(predicted_stop_cycle(8, 0.0).is_err());
    }

    #[test]
    fn prediction_matches_simulation() {
        for eps in [0.2, 0.05, 0.01] {
            let s = predicted_stop_cycle(8, eps).unwrap();
            let sim = simulated_stop_cycle(8, eps, 100_000, 1e-9).unwrap();
            assert_eq!(sim, Some(s.k), "eps={eps} {s:?}");
        }
    }
}
