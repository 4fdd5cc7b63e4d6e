//! Adaptive Gauss-Kronrod (7/15) quadrature with endpoint substitutions.
//!
//! The rule is open, so integrands with integrable endpoint singularities are
//! never evaluated at the singular point. An inverse-square-root blow-up at an
//! end is removed by the matching [`Substitution`].

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::Serialize;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Change of variables applied before integrating.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substitution {
    None,
    /// `x = a + L t^2`, clusters nodes at `a`.
    Lower,
    /// `x = b - L t^2`, clusters nodes at `b`.
    Upper,
    /// `x = a + L (1 - cos pi t) / 2`, clusters nodes at both ends.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
    pub substitution: Substitution,
}

/// One 15-point Kronrod pass: `(integral, |K15 - G7|)`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Quad {
    let mut quad = adapt(&f, a, b, tol);
    quad.substitution = Substitution::None;
    quad
}

/// Integrates `f` over `[a, b]` after the substitution `sub`.
pub fn integrate_sub<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    sub: Substitution,
    tol: Tolerance,
) -> Quad {
    let len = b - a;
    let mut quad = match sub {
        Substitution::None => adapt(&f, a, b, tol),
        Substitution::Lower => adapt(&|t: f64| 2.0 * len * t * f(a + len * t * t), 0.0, 1.0, tol),
        Substitution::Upper => adapt(&|t: f64| 2.0 * len * t * f(b - len * t * t), 0.0, 1.0, tol),
        Substitution::Both => adapt(
            &|t: f64| {
                let (s, c) = (PI * t).sin_cos();
                0.5 * PI * len * s * f(a + 0.5 * len * (1.0 - c))
            },
            0.0,
            1.0,
            tol,
        ),
    };
    quad.substitution = sub;
    quad
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Quad {
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let mut total = value;
    let mut err = error;
    while err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running updates.
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.error).sum();
    Quad {
        value: total,
        error: err,
        intervals: heap.len(),
        converged: err <= tol.abs.max(tol.rel * total.abs()),
        substitution: Substitution::None,
    }
}
