//! The radial chain of the uniform-random case.
//!
//! With `v_n` uniform on `S^{d-1}`, rotational invariance reduces the walk to
//! the chain `r -> sqrt(r^2 - 2 U r + 1)` where `U` is the absolute first
//! coordinate of a uniform point on the sphere.

mod lyapunov;
mod mc;
mod solver;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::quadrature::{integrate_sub, Quad, Substitution, Tolerance};

pub use lyapunov::{lyapunov_check, lyapunov_exact, LyapunovReport, LyapunovVerdict};
pub use mc::{mc_invariant, ExpMoment, McConfig, RadialHistogram};
pub use solver::{
    identity_residual_d3, solve_stationary, DensityGrid, GridSpec, IdentityPoint, SolverConfig,
};

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(invalid("d", format!("radial chain needs d >= 2, got {d}")));
    }
    Ok(())
}

/// `||x_n||` and the ambient dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub r: f64,
    pub d: usize,
}

impl RadialState {
    pub fn step<R: Rng + ?Sized>(self, rng: &mut R) -> RadialState {
        RadialState {
            r: radial_step(self.r, sample_first_coord(self.d, rng)),
            d: self.d,
        }
    }
}

/// `sqrt(r^2 - 2 u r + 1)`, written as `(r - u)^2 + (1 - u^2)` to avoid
/// cancellation near `r = u = 1`.
#[inline]
pub fn radial_step(r: f64, u: f64) -> f64 {
    let a = r - u;
    (a * a + (1.0 - u) * (1.0 + u)).max(0.0).sqrt()
}

/// `c_d = 2 Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2))`.
pub fn c_d(d: usize) -> Result<f64> {
    check_dim(d)?;
    let d = d as f64;
    Ok((2f64.ln() + ln_gamma(d / 2.0) - 0.5 * PI.ln() - ln_gamma((d - 1.0) / 2.0)).exp())
}

/// Density of `|first coordinate|` of a uniform point on `S^{d-1}`, zero
/// outside `[0, 1]`.
pub fn first_coord_density(d: usize, x: f64) -> Result<f64> {
    let c = c_d(d)?;
    if !(0.0..=1.0).contains(&x) {
        return Ok(0.0);
    }
    Ok(c * power_term(d, (1.0 - x) * (1.0 + x)))
}

#[inline]
fn power_term(d: usize, base: f64) -> f64 {
    match d {
        3 => 1.0,
        2 => 1.0 / base.sqrt(),
        4 => base.sqrt(),
        5 => base,
        _ => base.powf((d as f64 - 3.0) / 2.0),
    }
}

/// `|g_1| / ||g||` for `d` independent standard Gaussians.
#[inline]
pub fn sample_first_coord<R: Rng + ?Sized>(d: usize, rng: &mut R) -> f64 {
    loop {
        let g1: f64 = rng.sample(StandardNormal);
        let mut sq = g1 * g1;
        for _ in 1..d {
            let g: f64 = rng.sample(StandardNormal);
            sq += g * g;
        }
        if sq > 0.0 {
            return (g1.abs() / sq.sqrt()).min(1.0);
        }
    }
}

/// `E ||x_n||` under the invariant law: `sqrt(pi) Gamma((d+1)/2) / (2 Gamma(d/2))`.
pub fn stationary_mean(d: usize) -> Result<f64> {
    check_dim(d)?;
    let d = d as f64;
    Ok((0.5 * PI.ln() + ln_gamma((d + 1.0) / 2.0) - 2f64.ln() - ln_gamma(d / 2.0)).exp())
}

/// `E[X]` for `X = |first coordinate|`, by quadrature.
pub fn mean_first_coord(d: usize) -> Result<Quad> {
    let c = c_d(d)?;
    let sub = if d == 2 { Substitution::Upper } else { Substitution::None };
    Ok(integrate_sub(
        |x| x * c * power_term(d, (1.0 - x) * (1.0 + x)),
        0.0,
        1.0,
        sub,
        Tolerance::default(),
    ))
}

/// Reachable radii from `x`: `[|x - 1|, sqrt(x^2 + 1)]`.
pub fn reachable(x: f64) -> (f64, f64) {
    ((x - 1.0).abs(), x.hypot(1.0))
}

/// Transition density `P_d(x, y)` of the next radius `y` from `x > 0`.
pub fn kernel(d: usize, x: f64, y: f64) -> Result<f64> {
    check_dim(d)?;
    if !(x > 0.0) {
        return Err(invalid("x", format!("kernel needs x > 0, got {x}")));
    }
    Ok(kernel_unchecked(d, c_d(d)?, x, y))
}

#[inline]
pub(crate) fn kernel_unchecked(d: usize, c: f64, x: f64, y: f64) -> f64 {
    let (lo, hi) = reachable(x);
    if y < lo || y > hi {
        return 0.0;
    }
    // 1 - u = (y^2 - (x-1)^2) / 2x and 1 + u = ((x+1)^2 - y^2) / 2x.
    let one_minus = ((y - (x - 1.0)) * (y + (x - 1.0)) / (2.0 * x)).max(0.0);
    let one_plus = ((x + 1.0 - y) * (x + 1.0 + y) / (2.0 * x)).max(0.0);
    let base = one_minus * one_plus;
    if d == 2 && base == 0.0 {
        // Integrable singular endpoint.
        return 0.0;
    }
    c * (y / x) * power_term(d, base)
}

/// `int P_d(x, y) dy` over the reachable interval.
///
/// For `d = 2` the integrand has an inverse-square-root singularity at the
/// lower end, handled by `y = lo + L t^2`.
pub fn kernel_row_integral(d: usize, x: f64) -> Result<Quad> {
    check_dim(d)?;
    if !(x > 0.0) {
        return Err(invalid("x", format!("kernel needs x > 0, got {x}")));
    }
    let c = c_d(d)?;
    let (lo, hi) = reachable(x);
    let sub = if d == 2 { Substitution::Lower } else { Substitution::None };
    Ok(integrate_sub(
        |y| kernel_unchecked(d, c, x, y),
        lo,
        hi,
        sub,
        Tolerance::default(),
    ))
}
