//! Direction-vector families `v_n` behind one generator interface.
//!
//! Deterministic kinds are random access through [`SourceKind::direction_at`];
//! the uniform-sphere kind is sequential and owns its RNG inside
//! [`DirectionSource`].

mod farey;
mod real;
mod vdc;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use farey::{farey_term, FareyIter, Fraction};
pub use real::{parse_count, parse_expression, parse_scalar, DoubleDouble, Real};
pub use vdc::{digits, vdc};

pub(crate) use vdc::radical_inverse;

use crate::error::{invalid, Error, Result};
use crate::point::Point;

/// Parameterized direction family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SourceKind {
    /// Uniform directions on `S^{d-1}` from normalized standard Gaussians.
    UniformSphere { dim: usize, seed: Option<u64> },
    /// `(cos 2pi Vdc_b(n), sin 2pi Vdc_b(n))`.
    VanDerCorput { base: u64 },
    /// `(cos alpha n, sin alpha n)`; no factor `2pi` is inserted.
    Kronecker { alpha: Real },
    /// Angle `2pi c n^p`.
    PolyPhase { c: Real, power: u32 },
    /// Angle `2pi` times the `n`-th concatenated Farey fraction.
    Farey,
    /// Angle `2pi ||c n||`, distance to the nearest integer.
    NearestIntPhase { c: Real },
    /// `sqrt(n) (cos 2pi c n, sin 2pi c n)`.
    GrowingKronecker { c: Real },
    /// `(cos n, sin n, cos sqrt n)`.
    Trig3D,
}

impl SourceKind {
    pub fn dim(&self) -> usize {
        match self {
            SourceKind::UniformSphere { dim, .. } => *dim,
            SourceKind::Trig3D => 3,
            _ => 2,
        }
    }

    /// Index of the direction used by the first step.
    ///
    /// Van der Corput runs start at `Vdc_b(0)` from `z_{-1}`; the Farey stream
    /// starts at its first term. The remaining families follow `v_1, v_2, ...`.
    pub fn first_index(&self) -> u64 {
        match self {
            SourceKind::VanDerCorput { .. } | SourceKind::Farey => 0,
            _ => 1,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SourceKind::UniformSphere { seed, .. } => *seed,
            _ => None,
        }
    }

    /// Fills in a missing sphere seed; other kinds are returned unchanged.
    pub fn with_default_seed(self, seed: u64) -> SourceKind {
        match self {
            SourceKind::UniformSphere { dim, seed: None } => SourceKind::UniformSphere {
                dim,
                seed: Some(seed),
            },
            other => other,
        }
    }

    pub fn is_random_access(&self) -> bool {
        !matches!(self, SourceKind::UniformSphere { .. })
    }

    pub fn vdc_base(&self) -> Option<u64> {
        match self {
            SourceKind::VanDerCorput { base } => Some(*base),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SourceKind::UniformSphere { dim, .. } if *dim == 0 => {
                Err(invalid("d", "sphere dimension must be >= 1"))
            }
            SourceKind::VanDerCorput { base } if *base < 2 => {
                Err(invalid("b", format!("van der Corput base must be >= 2, got {base}")))
            }
            SourceKind::PolyPhase { power, .. } if *power == 0 => {
                Err(invalid("p", "polynomial phase power must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Direction `v_n` for deterministic kinds.
    pub fn direction_at(&self, n: u64) -> Result<Point> {
        let mut out = vec![0.0; self.dim()];
        self.fill_direction(n, &mut out)?;
        Ok(Point::from_vec_unchecked(out))
    }

    pub(crate) fn fill_direction(&self, n: u64, out: &mut [f64]) -> Result<()> {
        let angle = planar;
        let (x, y) = match self {
            SourceKind::UniformSphere { .. } => {
                return Err(Error::SequentialOnly(self.to_string()));
            }
            SourceKind::Trig3D => {
                let t = n as f64;
                let (s, c) = t.sin_cos();
                out[0] = c;
                out[1] = s;
                out[2] = t.sqrt().cos();
                return Ok(());
            }
            SourceKind::VanDerCorput { base } => angle(radical_inverse(n, *base)),
            SourceKind::Kronecker { alpha } => {
                let turns = alpha.extended().div(DoubleDouble::TAU).frac_mul(n as u128);
                angle(turns)
            }
            SourceKind::PolyPhase { c, power } => {
                angle(c.extended().frac_mul((n as u128).wrapping_pow(*power)))
            }
            SourceKind::Farey => angle(farey_term(n).value()),
            SourceKind::NearestIntPhase { c } => {
                let f = c.extended().frac_mul(n as u128);
                angle(f.min(1.0 - f))
            }
            SourceKind::GrowingKronecker { c } => {
                let (cx, cy) = angle(c.extended().frac_mul(n as u128));
                let r = (n as f64).sqrt();
                (r * cx, r * cy)
            }
        };
        out[0] = x;
        out[1] = y;
        Ok(())
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKind::UniformSphere { dim, seed } => {
                write!(f, "sphere:d={dim}")?;
                if let Some(seed) = seed {
                    write!(f, ":seed={seed}")?;
                }
                Ok(())
            }
            SourceKind::VanDerCorput { base } => write!(f, "vdc:b={base}"),
            SourceKind::Kronecker { alpha } => write!(f, "kronecker:alpha={alpha}"),
            SourceKind::PolyPhase { c, power } => write!(f, "polyphase:c={c}:p={power}"),
            SourceKind::Farey => f.write_str("farey"),
            SourceKind::NearestIntPhase { c } => write!(f, "nip:c={c}"),
            SourceKind::GrowingKronecker { c } => write!(f, "grow:c={c}"),
            SourceKind::Trig3D => f.write_str("trig3d"),
        }
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: String| Error::SourceSpec {
            spec: spec.to_string(),
            reason,
        };
        let mut parts = spec.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let mut params: Vec<(String, String)> = Vec::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got `{part}`")))?;
            let k = k.trim().to_ascii_lowercase();
            if params.iter().any(|(existing, _)| *existing == k) {
                return Err(fail(format!("duplicate key `{k}`")));
            }
            params.push((k, v.trim().to_string()));
        }
        let mut take = |key: &str| -> Option<String> {
            let pos = params.iter().position(|(k, _)| k == key)?;
            Some(params.remove(pos).1)
        };
        let real = |key: &str, v: Option<String>| -> Result<Real> {
            v.ok_or_else(|| fail(format!("missing `{key}`")))?
                .parse::<Real>()
                .map_err(|e| fail(e.to_string()))
        };
        let count = |key: &str, v: Option<String>| -> Result<u64> {
            parse_count(&v.ok_or_else(|| fail(format!("missing `{key}`")))?)
                .map_err(|e| fail(e.to_string()))
        };
        let kind = match name.as_str() {
            "sphere" => {
                let dim = count("d", take("d"))? as usize;
                let seed = take("seed").map(|s| count("seed", Some(s))).transpose()?;
                SourceKind::UniformSphere { dim, seed }
            }
            "vdc" => SourceKind::VanDerCorput {
                base: count("b", take("b"))?,
            },
            "kronecker" => SourceKind::Kronecker {
                alpha: real("alpha", take("alpha"))?,
            },
            "polyphase" => {
                let c = real("c", take("c"))?;
                let power = count("p", take("p"))?;
                let power = u32::try_from(power).map_err(|_| fail("power too large".into()))?;
                SourceKind::PolyPhase { c, power }
            }
            "farey" => SourceKind::Farey,
            "nip" => SourceKind::NearestIntPhase {
                c: real("c", take("c"))?,
            },
            "grow" => SourceKind::GrowingKronecker {
                c: real("c", take("c"))?,
            },
            "trig3d" => SourceKind::Trig3D,
            other => return Err(fail(format!("unknown source kind `{other}`"))),
        };
        if let Some((k, _)) = params.first() {
            return Err(fail(format!("unexpected key `{k}`")));
        }
        kind.validate().map_err(|e| fail(e.to_string()))?;
        Ok(kind)
    }
}

impl TryFrom<String> for SourceKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SourceKind> for String {
    fn from(k: SourceKind) -> String {
        k.to_string()
    }
}

#[derive(Clone, Debug)]
enum SourceState {
    Stateless,
    Sphere(ChaCha8Rng),
    Farey(FareyIter),
}

/// A stream of directions `v_{first}, v_{first+1}, ...`.
#[derive(Clone, Debug)]
pub struct DirectionSource {
    kind: SourceKind,
    next_index: u64,
    state: SourceState,
}

impl DirectionSource {
    /// Builds a stream. Sphere sources need a seed.
    pub fn new(kind: SourceKind) -> Result<Self> {
        kind.validate()?;
        let state = match &kind {
            SourceKind::UniformSphere { seed, .. } => {
                let seed = seed.ok_or_else(|| invalid("seed", "sphere source needs a seed"))?;
                SourceState::Sphere(ChaCha8Rng::seed_from_u64(seed))
            }
            SourceKind::Farey => SourceState::Farey(FareyIter::new()),
            _ => SourceState::Stateless,
        };
        Ok(DirectionSource {
            next_index: kind.first_index(),
            kind,
            state,
        })
    }

    pub fn vdc(base: u64) -> Result<Self> {
        Self::new(SourceKind::VanDerCorput { base })
    }

    pub fn sphere(dim: usize, seed: u64) -> Result<Self> {
        Self::new(SourceKind::UniformSphere {
            dim,
            seed: Some(seed),
        })
    }

    /// Fresh stream of the same kind with a new seed (sphere) or restarted index.
    pub fn reseeded(&self, seed: u64) -> Self {
        let kind = match &self.kind {
            SourceKind::UniformSphere { dim, .. } => SourceKind::UniformSphere {
                dim: *dim,
                seed: Some(seed),
            },
            other => other.clone(),
        };
        Self::new(kind).expect("kind already validated")
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Writes the next direction into `out` and returns its index.
    pub fn fill_next(&mut self, out: &mut [f64]) -> u64 {
        let n = self.next_index;
        match &mut self.state {
            SourceState::Sphere(rng) => sample_unit_sphere(rng, out),
            SourceState::Farey(it) => {
                let (c, s) = planar(it.next().expect("infinite iterator").value());
                out[0] = c;
                out[1] = s;
            }
            SourceState::Stateless => self
                .kind
                .fill_direction(n, out)
                .expect("stateless kinds are random access"),
        }
        self.next_index += 1;
        n
    }

    pub fn next_direction(&mut self) -> Point {
        let mut out = vec![0.0; self.dim()];
        self.fill_next(&mut out);
        Point::from_vec_unchecked(out)
    }
}

impl Iterator for DirectionSource {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        Some(self.next_direction())
    }
}

/// `(cos 2pi t, sin 2pi t)`. Kept out of line so every path rounds identically.
#[inline(never)]
fn planar(turns: f64) -> (f64, f64) {
    let (s, c) = (TAU * turns).sin_cos();
    (c, s)
}

/// Uniform point on `S^{d-1}`: `d` independent standard Gaussians, normalized.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
            sq += *c * *c;
        }
        if sq > 0.0 {
            let inv = 1.0 / sq.sqrt();
            out.iter_mut().for_each(|c| *c *= inv);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(s: &str) -> SourceKind {
        s.parse().unwrap()
    }

    #[test]
    fn grammar_round_trips() {
        for s in [
            "vdc:b=8",
            "sphere:d=4:seed=42",
            "sphere:d=3",
            "kronecker:alpha=1.0415*sqrt2",
            "polyphase:c=sqrt2:p=3",
            "farey",
            "nip:c=sqrt3",
            "grow:c=sqrt2",
            "trig3d",
        ] {
            let k = kind(s);
            assert_eq!(k.to_string(), s);
            assert_eq!(kind(&k.to_string()), k);
        }
        assert_eq!(kind("vdc:b=1e1"), SourceKind::VanDerCorput { base: 10 });
    }

    #[test]
    fn grammar_errors() {
        for bad in [
            "vdc",
            "vdc:b=1",
            "vdc:b=2:b=3",
            "vdc:b=2:x=1",
            "sphere:d=0",
            "polyphase:c=sqrt2:p=0",
            "warp:c=1",
            "kronecker:alpha=abc",
            "nip:c",
        ] {
            assert!(bad.parse::<SourceKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn unit_norm_for_planar_kinds() {
        for s in [
            "vdc:b=2",
            "vdc:b=7",
            "kronecker:alpha=1.0415*sqrt2",
            "polyphase:c=sqrt2:p=3",
            "polyphase:c=sqrt2:p=2",
            "farey",
            "nip:c=sqrt3",
        ] {
            let mut src = DirectionSource::new(kind(s)).unwrap();
            for _ in 0..2000 {
                let v = src.next_direction();
                assert!((v.norm() - 1.0).abs() < 1e-12, "{s}");
            }
        }
        let mut sphere = DirectionSource::sphere(5, 1).unwrap();
        for _ in 0..2000 {
            assert!((sphere.next_direction().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn growing_kronecker_norm_is_sqrt_n() {
        let k = kind("grow:c=sqrt2");
        for n in [1u64, 4, 9, 100, 12345] {
            let v = k.direction_at(n).unwrap();
            assert!((v.norm() - (n as f64).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn trig3d_components() {
        let v = SourceKind::Trig3D.direction_at(4).unwrap();
        assert_eq!(v.coords(), &[4f64.cos(), 4f64.sin(), 2f64.cos()]);
    }

    #[test]
    fn kronecker_has_no_hidden_two_pi() {
        let k = kind("kronecker:alpha=0.5");
        let v = k.direction_at(3).unwrap();
        assert!((v.x() - 1.5f64.cos()).abs() < 1e-15);
        assert!((v.y() - 1.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn polyphase_reduces_in_extended_precision() {
        // frac(sqrt2 * 10^18) from the decimal expansion of sqrt(2).
        let v = kind("polyphase:c=sqrt2:p=3").direction_at(1_000_000).unwrap();
        let angle = TAU * 0.801_688_724_209_698_1;
        assert!((v.x() - angle.cos()).abs() < 1e-10);
        assert!((v.y() - angle.sin()).abs() < 1e-10);
    }

    #[test]
    fn nearest_int_phase_near_integer() {
        // sqrt3 * 15 = 25.98..., distance 0.019 to the nearest integer.
        let k = kind("nip:c=sqrt3");
        let v = k.direction_at(15).unwrap();
        let d = (25.0f64 + 1.0) - 15.0 * 3f64.sqrt();
        assert!((v.y() - (TAU * d).sin()).abs() < 1e-12);
        assert!(v.x() > 0.99);
    }

    #[test]
    fn farey_stream_matches_random_access() {
        let mut src = DirectionSource::new(SourceKind::Farey).unwrap();
        for n in 0..500 {
            let a = src.next_direction();
            let b = SourceKind::Farey.direction_at(n).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn vdc_first_step_uses_index_zero() {
        let mut src = DirectionSource::vdc(2).unwrap();
        assert_eq!(src.fill_next(&mut [0.0; 2]), 0);
        assert_eq!(src.next_direction().coords()[0], -1.0);
    }

    #[test]
    fn sphere_is_deterministic_and_sequential_only() {
        let a: Vec<Point> = DirectionSource::sphere(4, 42).unwrap().take(10).collect();
        let b: Vec<Point> = DirectionSource::sphere(4, 42).unwrap().take(10).collect();
        let c: Vec<Point> = DirectionSource::sphere(4, 43).unwrap().take(10).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(kind("sphere:d=3:seed=1").direction_at(0).is_err());
        assert!(DirectionSource::new(kind("sphere:d=3")).is_err());
    }

    #[test]
    fn sphere_mean_vector_is_near_zero() {
        let n = 1_000_000;
        let mut src = DirectionSource::sphere(3, 7).unwrap();
        let mut sum = [0.0; 3];
        let mut abs_first = 0.0;
        let mut buf = [0.0; 3];
        for _ in 0..n {
            src.fill_next(&mut buf);
            for (s, b) in sum.iter_mut().zip(buf) {
                *s += b;
            }
            abs_first += buf[0].abs();
        }
        let mean_norm = sum.iter().map(|s| (s / n as f64).powi(2)).sum::<f64>().sqrt();
        assert!(mean_norm <= 5e-3, "{mean_norm}");
        // |first coordinate| is uniform on [0,1] in d = 3: sd = 1/sqrt(12).
        let sigma = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((abs_first / n as f64 - 0.5).abs() < 3.0 * sigma);
    }
}
