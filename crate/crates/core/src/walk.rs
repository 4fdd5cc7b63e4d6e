//! The greedy step rule and trajectory simulation.
//!
//! A step from `x` along `v` goes to whichever of `x + v`, `x - v` is closer
//! to the origin. Since `||x + v||^2 - ||x - v||^2 = 4 <x, v>` the choice is
//! decided by the sign of the inner product alone.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::point::{dot, norm, Point};
use crate::sources::{DirectionSource, SourceKind};

pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;

/// Sign applied to the step vector: `x_next = x + sign * v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Sign, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieMode {
    /// Stop the trajectory; the next point is undefined.
    Halt,
    /// Take `+v` and log the override.
    ChoosePlus,
}

/// How near-ties `|<x, v>| <= tolerance * ||x|| ||v||` are treated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiePolicy {
    pub tolerance: f64,
    pub mode: TieMode,
}

impl TiePolicy {
    pub fn new(tolerance: f64, mode: TieMode) -> Result<Self> {
        if !(0.0..1.0).contains(&tolerance) {
            return Err(invalid("tolerance", format!("must lie in [0, 1), got {tolerance}")));
        }
        Ok(TiePolicy { tolerance, mode })
    }

    pub fn halt() -> Self {
        TiePolicy {
            tolerance: DEFAULT_TIE_TOLERANCE,
            mode: TieMode::Halt,
        }
    }

    pub fn choose_plus() -> Self {
        TiePolicy {
            tolerance: DEFAULT_TIE_TOLERANCE,
            mode: TieMode::ChoosePlus,
        }
    }
}

impl Default for TiePolicy {
    fn default() -> Self {
        TiePolicy::halt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next: Point,
    pub sign: Sign,
    /// `<x_{n-1}, v_n>`.
    pub inner_product: f64,
    pub tie_override: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Moved(StepOutcome),
    Indeterminate { inner_product: f64 },
}

impl Step {
    pub fn outcome(&self) -> Option<&StepOutcome> {
        match self {
            Step::Moved(o) => Some(o),
            Step::Indeterminate { .. } => None,
        }
    }
}

/// Result of the in-place step kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum RawStep {
    Moved { sign: Sign, tie_override: bool },
    Indeterminate,
}

/// Decides the sign for `x` and `v` and, unless indeterminate, updates `x`.
#[inline]
pub(crate) fn step_in_place(x: &mut [f64], v: &[f64], policy: &TiePolicy) -> RawStep {
    let ip = dot(x, v);
    let tie = ip.abs() <= policy.tolerance * norm(x) * norm(v);
    let (sign, tie_override) = if tie {
        match policy.mode {
            TieMode::Halt => return RawStep::Indeterminate,
            TieMode::ChoosePlus => (Sign::Plus, true),
        }
    } else if ip > 0.0 {
        (Sign::Minus, false)
    } else {
        (Sign::Plus, false)
    };
    let s = sign.value();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi += s * vi;
    }
    RawStep::Moved { sign, tie_override }
}

/// One greedy step from `x` along `v`.
pub fn greedy_step(x: &Point, v: &Point, policy: &TiePolicy) -> Result<Step> {
    if x.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: v.dim(),
        });
    }
    if v.coords().iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroStep);
    }
    let inner_product = x.dot(v);
    let mut next = x.coords().to_vec();
    Ok(match step_in_place(&mut next, v.coords(), policy) {
        RawStep::Indeterminate => Step::Indeterminate { inner_product },
        RawStep::Moved { sign, tie_override } => Step::Moved(StepOutcome {
            next: Point::from_vec_unchecked(next),
            sign,
            inner_product,
            tie_override,
        }),
    })
}

/// What a trajectory keeps in memory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Storage {
    Full,
    /// Norms, signs and the final point, plus a uniform reservoir sample of
    /// `reservoir` full states.
    NormsOnly { reservoir: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateOptions {
    pub policy: TiePolicy,
    pub storage: Storage,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            policy: TiePolicy::default(),
            storage: Storage::Full,
        }
    }
}

/// A state kept by the reservoir sampler, with its position in the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledState {
    pub step: u64,
    pub point: Point,
}

/// Ordered record of a greedy walk.
///
/// `states[k]` carries the label `start_index + k`. Step `k` moves from
/// `states[k]` to `states[k + 1]` along the direction with index
/// `first_direction + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub source: Option<SourceKind>,
    pub policy: TiePolicy,
    pub start_index: i64,
    pub first_direction: u64,
    dim: usize,
    /// Flattened states, empty in norms-only mode.
    points: Vec<f64>,
    norms: Vec<f64>,
    signs: Vec<Sign>,
    last: Point,
    /// Step number at which the walk hit an indeterminate step.
    pub indeterminate_at: Option<u64>,
    /// Step numbers where a tie was broken by the policy.
    pub tie_overrides: Vec<u64>,
    pub reservoir: Vec<SampledState>,
}

impl Trajectory {
    fn start(x0: &Point, source: Option<SourceKind>, first: u64, opts: &SimulateOptions) -> Self {
        let full = matches!(opts.storage, Storage::Full);
        Trajectory {
            start_index: first as i64 - 1,
            first_direction: first,
            source,
            policy: opts.policy,
            dim: x0.dim(),
            points: if full { x0.coords().to_vec() } else { Vec::new() },
            norms: vec![x0.norm()],
            signs: Vec::new(),
            last: x0.clone(),
            indeterminate_at: None,
            tie_overrides: Vec::new(),
            reservoir: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of recorded states, `steps() + 1`.
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.signs.len()
    }

    pub fn has_points(&self) -> bool {
        !self.points.is_empty()
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn first(&self) -> Option<Point> {
        self.state(0)
    }

    pub fn last(&self) -> &Point {
        &self.last
    }

    pub fn halted(&self) -> bool {
        self.indeterminate_at.is_some()
    }

    /// `states[k]`; `None` past the end or in norms-only mode.
    pub fn state(&self, k: usize) -> Option<Point> {
        self.state_slice(k).map(|s| Point::from_vec_unchecked(s.to_vec()))
    }

    pub fn state_slice(&self, k: usize) -> Option<&[f64]> {
        let d = self.dim;
        self.points.get(k * d..(k + 1) * d)
    }

    /// State carrying label `n`, e.g. `z_n` for van der Corput runs.
    pub fn at_label(&self, n: i64) -> Option<Point> {
        let k = n.checked_sub(self.start_index)?;
        usize::try_from(k).ok().and_then(|k| self.state(k))
    }

    pub fn label(&self, k: usize) -> i64 {
        self.start_index + k as i64
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Pointwise negation with flipped signs.
    pub fn negated(&self) -> Trajectory {
        let mut t = self.clone();
        t.points.iter_mut().for_each(|c| *c = -*c);
        t.signs.iter_mut().for_each(|s| *s = s.flip());
        t.last = -&t.last;
        for s in &mut t.reservoir {
            s.point = -&s.point;
        }
        t
    }

    fn push(&mut self, x: &[f64], sign: Sign) {
        if !self.points.is_empty() {
            self.points.extend_from_slice(x);
        }
        self.norms.push(norm(x));
        self.signs.push(sign);
    }
}

/// Runs `n` greedy steps from `x0` with full storage.
pub fn simulate(
    x0: &Point,
    source: &mut DirectionSource,
    n: u64,
    policy: TiePolicy,
) -> Result<Trajectory> {
    simulate_with(
        x0,
        source,
        n,
        &SimulateOptions {
            policy,
            storage: Storage::Full,
        },
    )
}

pub fn simulate_with(
    x0: &Point,
    source: &mut DirectionSource,
    n: u64,
    opts: &SimulateOptions,
) -> Result<Trajectory> {
    if x0.dim() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: x0.dim(),
        });
    }
    let mut traj = Trajectory::start(x0, Some(source.kind().clone()), source.next_index(), opts);
    let mut sampler = match opts.storage {
        Storage::NormsOnly { reservoir, seed } if reservoir > 0 => {
            let mut r = Reservoir::new(reservoir, seed);
            r.offer(0, x0.coords());
            Some(r)
        }
        _ => None,
    };
    let mut x = x0.coords().to_vec();
    let mut v = vec![0.0; x.len()];
    for k in 0..n {
        source.fill_next(&mut v);
        if v.iter().all(|c| *c == 0.0) {
            return Err(Error::ZeroStep);
        }
        match step_in_place(&mut x, &v, &opts.policy) {
            RawStep::Indeterminate => {
                traj.indeterminate_at = Some(k);
                break;
            }
            RawStep::Moved { sign, tie_override } => {
                if tie_override {
                    traj.tie_overrides.push(k);
                }
                traj.push(&x, sign);
                if let Some(r) = sampler.as_mut() {
                    r.offer(k + 1, &x);
                }
            }
        }
    }
    traj.last = Point::from_vec_unchecked(x);
    if let Some(r) = sampler {
        traj.reservoir = r.into_sorted();
    }
    Ok(traj)
}

/// Algorithm R over `(step, point)` pairs.
struct Reservoir {
    cap: usize,
    seen: u64,
    items: Vec<SampledState>,
    rng: ChaCha8Rng,
}

impl Reservoir {
    fn new(cap: usize, seed: u64) -> Self {
        Reservoir {
            cap,
            seen: 0,
            items: Vec::with_capacity(cap),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn offer(&mut self, step: u64, x: &[f64]) {
        self.seen += 1;
        let item = || SampledState {
            step,
            point: Point::from_vec_unchecked(x.to_vec()),
        };
        if self.items.len() < self.cap {
            self.items.push(item());
        } else {
            let j = self.rng.random_range(0..self.seen);
            if (j as usize) < self.cap {
                self.items[j as usize] = item();
            }
        }
    }

    fn into_sorted(mut self) -> Vec<SampledState> {
        self.items.sort_by_key(|s| s.step);
        self.items
    }
}

/// Greedy signs in the harmonic series: `x_1 = 1`, then `x_k = x_{k-1} + 1/k`
/// while `x_{k-1} <= target` and `x_{k-1} - 1/k` above it.
///
/// Returns `x_1, ..., x_n`.
pub fn greedy_harmonic(target: f64, n: u64) -> Result<Vec<f64>> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(invalid("target", format!("must be positive and finite, got {target}")));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one term"));
    }
    let mut xs = Vec::with_capacity(n as usize);
    let mut x = 1.0;
    xs.push(x);
    for k in 2..=n {
        let step = 1.0 / k as f64;
        if x <= target {
            x += step;
        } else {
            x -= step;
        }
        xs.push(x);
    }
    Ok(xs)
}

/// First `k` (1-based) at which the harmonic walk lands on the other side of
/// `target` than `x_{k-1}`.
pub fn harmonic_first_crossing(xs: &[f64], target: f64) -> Option<usize> {
    xs.windows(2)
        .position(|w| (w[0] <= target) != (w[1] <= target))
        .map(|i| i + 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moved(step: Step) -> StepOutcome {
        match step {
            Step::Moved(o) => o,
            Step::Indeterminate { .. } => panic!("unexpected tie"),
        }
    }

    #[test]
    fn colinear_step_decreases_norm() {
        let o = moved(greedy_step(&Point::xy(2.0, 0.0), &Point::xy(1.0, 0.0), &TiePolicy::halt()).unwrap());
        assert_eq!(o.next, Point::xy(1.0, 0.0));
        assert_eq!(o.sign, Sign::Minus);
        assert_eq!(o.inner_product, 2.0);
    }

    #[test]
    fn origin_is_indeterminate() {
        let s = greedy_step(&Point::xy(0.0, 0.0), &Point::xy(1.0, 0.0), &TiePolicy::halt()).unwrap();
        assert_eq!(s, Step::Indeterminate { inner_product: 0.0 });
    }

    #[test]
    fn hand_computed_step() {
        // ||(3,5)|| = sqrt 34 > ||(3,3)|| = sqrt 18.
        let o = moved(greedy_step(&Point::xy(3.0, 4.0), &Point::xy(0.0, 1.0), &TiePolicy::halt()).unwrap());
        assert_eq!(o.next, Point::xy(3.0, 3.0));
        assert_eq!(o.sign, Sign::Minus);
    }

    #[test]
    fn choose_plus_logs_override() {
        let o = moved(
            greedy_step(&Point::xy(0.0, 1.0), &Point::xy(1.0, 0.0), &TiePolicy::choose_plus()).unwrap(),
        );
        assert_eq!(o.next, Point::xy(1.0, 1.0));
        assert!(o.tie_override);

        let mut src = DirectionSource::vdc(2).unwrap();
        let t = simulate(&Point::xy(0.0, 0.0), &mut src, 3, TiePolicy::choose_plus()).unwrap();
        assert_eq!(t.tie_overrides, vec![0]);
        assert_eq!(t.steps(), 3);
    }

    #[test]
    fn step_errors() {
        let p = TiePolicy::halt();
        assert_eq!(
            greedy_step(&Point::xy(1.0, 0.0), &Point::new(vec![1.0]).unwrap(), &p),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
        assert_eq!(greedy_step(&Point::xy(1.0, 0.0), &Point::xy(0.0, 0.0), &p), Err(Error::ZeroStep));
        assert!(TiePolicy::new(1.0, TieMode::Halt).is_err());
        assert!(TiePolicy::new(-1e-3, TieMode::Halt).is_err());
    }

    #[test]
    fn zero_steps_is_just_the_start() {
        let mut src = DirectionSource::vdc(3).unwrap();
        let t = simulate(&Point::xy(0.7, -0.2), &mut src, 0, TiePolicy::halt()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.state(0), Some(Point::xy(0.7, -0.2)));
    }

    #[test]
    fn halts_without_recording_past_the_tie() {
        let mut src = DirectionSource::vdc(2).unwrap();
        let t = simulate(&Point::xy(0.0, 0.0), &mut src, 10, TiePolicy::halt()).unwrap();
        assert_eq!(t.indeterminate_at, Some(0));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn vdc_base2_from_far_enters_sqrt2_ball() {
        // (10,0) meets v = (0,1) after two steps: an exact tie.
        let mut src = DirectionSource::vdc(2).unwrap();
        let t = simulate(&Point::xy(10.0, 0.0), &mut src, 200, TiePolicy::halt()).unwrap();
        assert_eq!(t.indeterminate_at, Some(2));
        assert_eq!(t.start_index, -1);

        let mut src = DirectionSource::vdc(2).unwrap();
        let t = simulate(&Point::xy(10.0, 0.0), &mut src, 200, TiePolicy::choose_plus()).unwrap();
        assert!(!t.tie_overrides.is_empty());
        assert!(t.last().norm() <= 2f64.sqrt());

        let mut src = DirectionSource::vdc(2).unwrap();
        let t = simulate(&Point::xy(10.0, 0.3), &mut src, 200, TiePolicy::halt()).unwrap();
        assert!(!t.halted());
        assert!(t.last().norm() <= 2f64.sqrt());
    }

    #[test]
    fn states_follow_recorded_signs() {
        let kind: SourceKind = "kronecker:alpha=1.0415*sqrt2".parse().unwrap();
        let mut src = DirectionSource::new(kind.clone()).unwrap();
        let t = simulate(&Point::xy(0.0001, 5.0), &mut src, 500, TiePolicy::halt()).unwrap();
        for k in 0..t.steps() {
            let v = kind.direction_at(t.first_direction + k as u64).unwrap();
            let expect = t.state(k).unwrap().add_scaled(&v, t.signs()[k].value());
            assert_eq!(t.state(k + 1).unwrap(), expect);
        }
    }

    #[test]
    fn norms_only_keeps_norms_and_reservoir() {
        let mut a = DirectionSource::sphere(3, 9).unwrap();
        let mut b = a.clone();
        let x0 = Point::new(vec![1.0, 2.0, 3.0]).unwrap();
        let full = simulate(&x0, &mut a, 5000, TiePolicy::halt()).unwrap();
        let opts = SimulateOptions {
            policy: TiePolicy::halt(),
            storage: Storage::NormsOnly { reservoir: 50, seed: 1 },
        };
        let light = simulate_with(&x0, &mut b, 5000, &opts).unwrap();
        assert!(!light.has_points());
        assert_eq!(light.norms(), full.norms());
        assert_eq!(light.last(), full.last());
        assert_eq!(light.reservoir.len(), 50);
        for s in &light.reservoir {
            assert_eq!(Some(s.point.clone()), full.state(s.step as usize));
        }
    }

    #[test]
    fn harmonic_follows_case_split() {
        let xs = greedy_harmonic(1.0, 4).unwrap();
        assert_eq!(xs, vec![1.0, 1.5, 1.5 - 1.0 / 3.0, 1.5 - 1.0 / 3.0 - 0.25]);
        assert!(greedy_harmonic(0.0, 3).is_err());
        assert!(greedy_harmonic(1.0, 0).is_err());
    }

    #[test]
    fn harmonic_stays_within_two_over_k() {
        for target in [0.5, 1.0, std::f64::consts::PI, 2.2] {
            let xs = greedy_harmonic(target, 200_000).unwrap();
            let start = harmonic_first_crossing(&xs, target).unwrap();
            for (i, x) in xs.iter().enumerate().skip(start - 1) {
                let k = (i + 1) as f64;
                assert!((x - target).abs() <= 2.0 / k + 1e-12, "target {target}, k {k}");
            }
        }
    }
}
