//! Empirical check of the drift bound
//! `E exp(alpha ||x_{n+1}||^2) <= e^alpha c_d / (2 alpha r) exp(alpha r^2)`.
//!
//! Dividing both sides by `exp(alpha (r^2 + 1))` leaves
//! `E exp(-2 alpha r U) <= c_d / (2 alpha r)`, which is what is estimated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{c_d, check_dim, power_term, sample_first_coord};
use crate::error::{invalid, Result};
use crate::quadrature::{integrate_sub, Substitution, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovVerdict {
    Pass,
    Fail,
    /// The bound is at least 1 and holds trivially.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub d: usize,
    pub r: f64,
    pub alpha: f64,
    pub n_trials: u64,
    pub seed: u64,
    /// Monte Carlo mean of `exp(-2 alpha r U)`.
    pub estimate: f64,
    pub standard_error: f64,
    /// `c_d / (2 alpha r)`.
    pub bound: f64,
    /// Quadrature value of `E exp(-2 alpha r U)`.
    pub exact: f64,
    /// `ln E exp(alpha ||x_{n+1}||^2)` from the estimate.
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub verdict: LyapunovVerdict,
}

impl LyapunovReport {
    pub fn passed(&self) -> bool {
        self.verdict != LyapunovVerdict::Fail
    }
}

/// `E exp(-2 alpha r U)` by quadrature against the first-coordinate density.
pub fn lyapunov_exact(d: usize, r: f64, alpha: f64) -> Result<f64> {
    let c = c_d(d)?;
    let t = 2.0 * alpha * r;
    let sub = if d == 2 { Substitution::Upper } else { Substitution::None };
    Ok(integrate_sub(
        |u| c * power_term(d, (1.0 - u) * (1.0 + u)) * (-t * u).exp(),
        0.0,
        1.0,
        sub,
        Tolerance::default(),
    )
    .value)
}

/// Monte Carlo test of the drift inequality at radius `r`.
///
/// Passes unless the estimate exceeds the bound by more than three standard
/// errors.
pub fn lyapunov_check(d: usize, r: f64, alpha: f64, n_trials: u64, seed: u64) -> Result<LyapunovReport> {
    check_dim(d)?;
    if !(r > 0.0 && alpha > 0.0) {
        return Err(invalid("r", "r and alpha must be positive"));
    }
    if n_trials < 2 {
        return Err(invalid("n_trials", "need at least two trials"));
    }
    let t = 2.0 * alpha * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n_trials {
        let u = sample_first_coord(d, &mut rng);
        // exp(alpha (r'^2 - r^2 - 1)) with r' = radial_step(r, u).
        let w = (-t * u).exp();
        s += w;
        s2 += w * w;
    }
    let n = n_trials as f64;
    let estimate = s / n;
    let var = ((s2 - n * estimate * estimate) / (n - 1.0)).max(0.0);
    let standard_error = (var / n).sqrt();
    let c = c_d(d)?;
    let bound = c / t;
    let verdict = if bound >= 1.0 {
        LyapunovVerdict::Degenerate
    } else if estimate - 3.0 * standard_error <= bound {
        LyapunovVerdict::Pass
    } else {
        LyapunovVerdict::Fail
    };
    Ok(LyapunovReport {
        d,
        r,
        alpha,
        n_trials,
        seed,
        estimate,
        standard_error,
        bound,
        exact: lyapunov_exact(d, r, alpha)?,
        log_lhs: alpha * (r * r + 1.0) + estimate.ln(),
        log_rhs: alpha + bound.ln() + alpha * r * r,
        verdict,
    })
}
