//! Base-2 specifics: pair monotonicity, hitting times, the unit-ball
//! semicircle and stalling starts.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::VdcWalker;
use crate::error::{invalid, Error, Result};
use crate::point::{dot, Point};
use crate::sources::{radical_inverse, SourceKind};
use crate::walk::Trajectory;

/// `8 / (2 (sqrt 2 - 1))`, steps per unit of radius in the worst case.
pub const HITTING_SLOPE_BOUND: f64 = 4.0 / (SQRT_2 - 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum HitOutcome {
    /// Number of steps taken when the norm first fell below the target.
    Hit { steps: u64 },
    /// The sign was indeterminate at this zero-based step.
    Indeterminate { step: u64 },
    Exhausted,
}

impl HitOutcome {
    pub fn steps(&self) -> Option<u64> {
        match self {
            HitOutcome::Hit { steps } => Some(*steps),
            _ => None,
        }
    }
}

/// Steps until `||z|| < target_radius` in the base-`b` system; zero when the
/// start is already inside.
pub fn hitting_time(start: &Point, b: u64, target_radius: f64, max_steps: u64) -> Result<HitOutcome> {
    if !(target_radius > 0.0) {
        return Err(invalid("target_radius", "must be positive"));
    }
    let mut w = VdcWalker::new(b, start)?;
    if w.norm() < target_radius {
        return Ok(HitOutcome::Hit { steps: 0 });
    }
    for step in 0..max_steps {
        if w.step().is_none() {
            return Ok(HitOutcome::Indeterminate { step });
        }
        if w.norm() < target_radius {
            return Ok(HitOutcome::Hit { steps: step + 1 });
        }
    }
    Ok(HitOutcome::Exhausted)
}

/// `8 (||z|| - 2) + 8`, clamped at 8 inside the ball of radius 2.
pub fn hitting_bound(start: &Point) -> f64 {
    8.0 * (start.norm() - 2.0).max(0.0) + 8.0
}

fn require_base2(traj: &Trajectory) -> Result<()> {
    let ok = matches!(traj.source, Some(SourceKind::VanDerCorput { base: 2 }))
        && traj.start_index == -1
        && traj.dim() == 2;
    if !ok {
        return Err(Error::WrongSource { expected: 2 });
    }
    if !traj.has_points() {
        return Err(invalid("trajectory", "full storage is required"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairViolationKind {
    Increase,
    /// Equal norms at distinct points.
    TieWithoutReturn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    /// Label `2n - 1` of the earlier state.
    pub label: i64,
    pub before: f64,
    pub after: f64,
    pub kind: PairViolationKind,
}

/// Checks `||z_{2n-1}|| >= ||z_{2n+1}||` along a base-2 trajectory, with
/// equality only when the two points coincide.
pub fn monotone_pairs_check(traj: &Trajectory, tol: f64) -> Result<Vec<PairViolation>> {
    require_base2(traj)?;
    let mut out = Vec::new();
    let norms = traj.norms();
    let mut k = 0;
    while k + 2 < traj.len() {
        let (before, after) = (norms[k], norms[k + 2]);
        if after > before + tol {
            out.push(PairViolation {
                label: traj.label(k),
                before,
                after,
                kind: PairViolationKind::Increase,
            });
        } else if (after - before).abs() <= tol {
            let a = traj.state_slice(k).expect("full storage");
            let b = traj.state_slice(k + 2).expect("full storage");
            if (a[0] - b[0]).hypot(a[1] - b[1]) > tol {
                out.push(PairViolation {
                    label: traj.label(k),
                    before,
                    after,
                    kind: PairViolationKind::TieWithoutReturn,
                });
            }
        }
        k += 2;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDecrease {
    pub blocks_checked: u64,
    /// Smallest `||z_k|| - ||z_{k+8}||` over blocks with `||z_k|| > 2`.
    pub min_decrease: f64,
    /// Labels `k` where the decrease fell short of `2 (sqrt 2 - 1) - tol`.
    pub violations: Vec<i64>,
}

/// Checks the per-block decrease `||z_k|| - ||z_{k+8}|| >= 2 (sqrt 2 - 1)`
/// for `k = -1 mod 8` while `||z_k|| > 2`.
pub fn block_decrease_check(traj: &Trajectory, tol: f64) -> Result<BlockDecrease> {
    require_base2(traj)?;
    let norms = traj.norms();
    let need = 2.0 * (SQRT_2 - 1.0) - tol;
    let mut rep = BlockDecrease {
        blocks_checked: 0,
        min_decrease: f64::INFINITY,
        violations: Vec::new(),
    };
    let mut k = 0;
    while k + 8 < traj.len() {
        if norms[k] > 2.0 {
            let dec = norms[k] - norms[k + 8];
            rep.blocks_checked += 1;
            rep.min_decrease = rep.min_decrease.min(dec);
            if dec < need {
                rep.violations.push(traj.label(k));
            }
        }
        k += 8;
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemicircleReport {
    /// First odd label `n` with `||z_n|| < 1`.
    pub entry_label: i64,
    pub centre: Point,
    pub states_checked: usize,
    /// Largest `||z_{n+2j} - z_n||`.
    pub max_return_error: f64,
    /// Largest `| ||z_{n+2j+1} - z_n|| - 1 |`.
    pub max_radius_error: f64,
    /// Largest `<z_{n+2j+1} - z_n, z_n>`; positive values leave the half
    /// facing the origin.
    pub max_halfplane_excess: f64,
    pub passed: bool,
}

/// After the first odd label with `||z_n|| < 1`, the run alternates between
/// `z_n` and points of the unit semicircle around `z_n` on the origin side.
pub fn semicircle_check(traj: &Trajectory, tol: f64) -> Result<SemicircleReport> {
    require_base2(traj)?;
    let entry = (0..traj.len())
        .step_by(2)
        .find(|&k| traj.norms()[k] < 1.0)
        .ok_or(Error::NeverEntersBall)?;
    let c = traj.state_slice(entry).expect("full storage").to_vec();
    let mut rep = SemicircleReport {
        entry_label: traj.label(entry),
        centre: Point::xy(c[0], c[1]),
        states_checked: 0,
        max_return_error: 0.0,
        max_radius_error: 0.0,
        max_halfplane_excess: f64::NEG_INFINITY,
        passed: false,
    };
    for k in entry + 1..traj.len() {
        let p = traj.state_slice(k).expect("full storage");
        let diff = [p[0] - c[0], p[1] - c[1]];
        let dist = diff[0].hypot(diff[1]);
        if (k - entry) % 2 == 0 {
            rep.max_return_error = rep.max_return_error.max(dist);
        } else {
            rep.max_radius_error = rep.max_radius_error.max((dist - 1.0).abs());
            rep.max_halfplane_excess = rep.max_halfplane_excess.max(dot(&diff, &c));
        }
        rep.states_checked += 1;
    }
    rep.passed = rep.max_return_error <= tol
        && rep.max_radius_error <= tol
        && rep.max_halfplane_excess <= tol;
    Ok(rep)
}

/// The closed form `(4 cos x - sqrt(16 cos^2 x - 12)) / 2`, `x = pi 2^{-k-1}`,
/// offered as the radius below which a start on a generic ray stalls for
/// `2^k` pairs.
pub fn closed_form_stall_alpha(k: u32) -> f64 {
    let c = (PI * 0.5f64.powi(k as i32 + 1)).cos();
    (4.0 * c - (16.0 * c * c - 12.0).sqrt()) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StallStart {
    pub n: u64,
    /// `floor(log2 n)`.
    pub k: u32,
    /// The closed-form radius of [`closed_form_stall_alpha`].
    pub alpha_closed_form: f64,
    /// `1 / cos(phi)`, the largest radius that stalls along the chosen ray.
    pub alpha_exact: f64,
    /// Angle between the start and the nearest of the first `n` pair lines.
    pub phi: f64,
    pub start: Point,
    /// `z_{2i-1} = z_{-1}` held for every `i <= n` in simulation.
    pub verified: bool,
    pub steps_checked: u64,
}

/// A start in `B(0, alpha) \ B(0, 1)` whose first `n` pairs all return, so
/// that `z_{2i-1} = z_{-1}` for `i <= n`.
///
/// Pair `i` moves along the line at angle `pi Vdc_2(i)` and returns exactly
/// when `r |cos phi_i| < 1`, with `phi_i` the angle between the start and
/// that line. The start is placed just off the middle of the widest gap
/// between the first `n` lines, halfway between radius 1 and the largest
/// radius that still returns.
pub fn stall_start(n: u64) -> Result<StallStart> {
    if n < 4 {
        return Err(invalid("n", "stalling starts are built for n >= 4"));
    }
    let k = 63 - n.leading_zeros();
    let mut lines: Vec<f64> = (0..n).map(|i| PI * radical_inverse(i, 2)).collect();
    lines.sort_by(f64::total_cmp);
    let (gap, from) = lines
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let next = lines.get(i + 1).copied().unwrap_or(lines[0] + PI);
            (next - a, *a)
        })
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .expect("n >= 4 lines");
    let offset = 1e-3;
    let angle = from + gap / 2.0 + offset;
    let phi = gap / 2.0 - offset;
    let alpha_exact = 1.0 / phi.cos();
    let r = 1.0 + (alpha_exact - 1.0) / 2.0;
    let start = Point::xy(r * angle.cos(), r * angle.sin());

    let mut w = VdcWalker::new(2, &start)?;
    let z0 = w.z;
    let mut verified = true;
    for _ in 0..n {
        if w.step().is_none() || w.step().is_none() || w.distance_to(z0) > 1e-12 {
            verified = false;
            break;
        }
    }
    Ok(StallStart {
        n,
        k,
        alpha_closed_form: closed_form_stall_alpha(k),
        alpha_exact,
        phi,
        start,
        verified,
        steps_checked: 2 * n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::DirectionSource;
    use crate::walk::{simulate, TiePolicy};

    fn run(x: f64, y: f64, n: u64) -> Trajectory {
        let mut src = DirectionSource::vdc(2).unwrap();
        simulate(&Point::xy(x, y), &mut src, n, TiePolicy::halt()).unwrap()
    }

    #[test]
    fn hitting_examples() {
        assert_eq!(
            hitting_time(&Point::xy(0.5, 0.5), 2, SQRT_2, 10).unwrap(),
            HitOutcome::Hit { steps: 0 }
        );
        let z = Point::xy(50.0, 17.0);
        let steps = hitting_time(&z, 2, SQRT_2, 10_000).unwrap().steps().unwrap();
        assert!((steps as f64) <= hitting_bound(&z), "{steps}");
        assert_eq!(hitting_time(&z, 2, SQRT_2, 3).unwrap(), HitOutcome::Exhausted);
        assert_eq!(
            hitting_time(&Point::xy(0.0, 5.0), 2, 0.5, 100).unwrap(),
            HitOutcome::Indeterminate { step: 0 }
        );
    }

    #[test]
    fn pairs_never_increase() {
        let t = run(13.7, -4.2, 5000);
        assert!(monotone_pairs_check(&t, 1e-9).unwrap().is_empty());
        let d = block_decrease_check(&t, 1e-9).unwrap();
        assert!(d.blocks_checked > 0 && d.violations.is_empty(), "{d:?}");
    }

    #[test]
    fn wrong_source_is_refused() {
        let mut src = DirectionSource::vdc(3).unwrap();
        let t = simulate(&Point::xy(1.0, 2.0), &mut src, 10, TiePolicy::halt()).unwrap();
        assert_eq!(monotone_pairs_check(&t, 1e-9), Err(Error::WrongSource { expected: 2 }));
        assert!(semicircle_check(&t, 1e-9).is_err());
    }

    #[test]
    fn semicircle_after_entry() {
        let t = run(7.3, 2.9, 4000);
        let rep = semicircle_check(&t, 1e-9).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.entry_label % 2 != 0);
        assert!(rep.centre.norm() < 1.0);
        let short = run(70.0, 0.3, 4);
        assert_eq!(semicircle_check(&short, 1e-9), Err(Error::NeverEntersBall));
    }

    #[test]
    fn closed_form_alpha() {
        assert!((closed_form_stall_alpha(2) - 1.204_17).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for k in 2..=20 {
            let a = closed_form_stall_alpha(k);
            assert!(a < prev && a > 1.0);
            prev = a;
        }
    }

    #[test]
    fn stall_starts_hold() {
        for n in [4u64, 16, 64, 100] {
            let s = stall_start(n).unwrap();
            assert!(s.verified, "{s:?}");
            let r = s.start.norm();
            assert!(r > 1.0 && r < s.alpha_exact && r < s.alpha_closed_form);
        }
        assert!(stall_start(3).is_err());
    }

    #[test]
    fn closed_form_radius_can_fail_to_stall() {
        // Just inside the closed-form radius on the mid-gap ray.
        let r = closed_form_stall_alpha(2) - 1e-3;
        let a = PI / 8.0;
        let mut w = VdcWalker::new(2, &Point::xy(r * a.cos(), r * a.sin())).unwrap();
        let z0 = w.z;
        let returned = (0..4).all(|_| {
            w.step();
            w.step();
            w.distance_to(z0) < 1e-12
        });
        assert!(!returned);
    }
}
